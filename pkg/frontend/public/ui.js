/**
 * Canvas front end for the mask board.  All mask logic lives in BoardState;
 * this file only wires DOM events, pixels, and the API client together.
 */
import { ApiError, inpaint } from "./api.js";
import { BoardState, centerCrop, cropRgb, panelOrder } from "./board.js";
const SAMPLE_URL = "sample.png";
const HOLE_OVERLAY = "rgba(220, 40, 40, 0.55)";
let board = null;
function $(id) {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
}
function canvas() {
    return $("board");
}
async function loadImage(url) {
    const img = new Image();
    img.src = url;
    await img.decode();
    const c = canvas();
    c.width = img.naturalWidth;
    c.height = img.naturalHeight;
    const ctx = c.getContext("2d");
    ctx.drawImage(img, 0, 0);
    const rgba = ctx.getImageData(0, 0, c.width, c.height).data;
    const rgb = new Uint8Array(c.width * c.height * 3);
    for (let i = 0; i < c.width * c.height; i++) {
        rgb[3 * i] = rgba[4 * i];
        rgb[3 * i + 1] = rgba[4 * i + 1];
        rgb[3 * i + 2] = rgba[4 * i + 2];
    }
    board = new BoardState(rgb, c.width, c.height);
    redraw();
}
function redraw() {
    if (!board)
        return;
    const c = canvas();
    const ctx = c.getContext("2d");
    const rgba = new ImageData(c.width, c.height);
    for (let i = 0; i < c.width * c.height; i++) {
        rgba.data[4 * i] = board.image[3 * i];
        rgba.data[4 * i + 1] = board.image[3 * i + 1];
        rgba.data[4 * i + 2] = board.image[3 * i + 2];
        rgba.data[4 * i + 3] = 255;
    }
    ctx.putImageData(rgba, 0, 0);
    ctx.fillStyle = HOLE_OVERLAY;
    const hole = board.holeBitmap();
    for (let y = 0; y < c.height; y++) {
        let runStart = -1;
        for (let x = 0; x <= c.width; x++) {
            const on = x < c.width && hole[y * c.width + x] === 1;
            if (on && runStart < 0)
                runStart = x;
            if (!on && runStart >= 0) {
                ctx.fillRect(runStart, y, x - runStart, 1);
                runStart = -1;
            }
        }
    }
    updateStatus();
}
function updateStatus() {
    if (!board)
        return;
    const ratio = board.maskRatio();
    $("ratio").textContent = `mask ratio r = ${ratio.toFixed(3)}`;
    const submit = $("submit");
    submit.disabled = !board.canSubmit();
    $("hint").textContent = board.holePixelCount() === 0
        ? "paint a hole first"
        : board.requestInFlight ? "inpainting…" : "";
}
function canvasPoint(ev) {
    const rect = canvas().getBoundingClientRect();
    return {
        x: ((ev.clientX - rect.left) / rect.width) * canvas().width,
        y: ((ev.clientY - rect.top) / rect.height) * canvas().height,
    };
}
function rgbToDataUrl(rgb, w, h) {
    const off = document.createElement("canvas");
    off.width = w;
    off.height = h;
    const ctx = off.getContext("2d");
    const rgba = new ImageData(w, h);
    for (let i = 0; i < w * h; i++) {
        rgba.data[4 * i] = rgb[3 * i];
        rgba.data[4 * i + 1] = rgb[3 * i + 1];
        rgba.data[4 * i + 2] = rgb[3 * i + 2];
        rgba.data[4 * i + 3] = 255;
    }
    ctx.putImageData(rgba, 0, 0);
    return off.toDataURL("image/png");
}
function grayToDataUrl(gray, w, h) {
    const rgb = new Uint8Array(w * h * 3);
    for (let i = 0; i < w * h; i++) {
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = gray[i];
    }
    return rgbToDataUrl(rgb, w, h);
}
async function pngBlob(dataUrl) {
    const r = await fetch(dataUrl);
    return new Uint8Array(await r.arrayBuffer());
}
function addPanel(row, title, src) {
    const fig = document.createElement("figure");
    const img = document.createElement("img");
    img.src = src;
    const cap = document.createElement("figcaption");
    cap.textContent = title;
    fig.appendChild(img);
    fig.appendChild(cap);
    row.appendChild(fig);
}
async function submit() {
    if (!board || !board.canSubmit())
        return;
    const method = $("method").value;
    const b = board;
    const w = b.width;
    const h = b.height;
    b.requestInFlight = true;
    updateStatus();
    try {
        const imagePng = await pngBlob(rgbToDataUrl(b.image, w, h));
        const maskPng = await pngBlob(grayToDataUrl(b.exportMask(), w, h));
        const t0 = performance.now();
        const resp = await inpaint("", imagePng, maskPng, method);
        const row = document.createElement("div");
        row.className = "result-row";
        const titles = panelOrder(method);
        addPanel(row, titles[0], rgbToDataUrl(b.maskedInput(), w, h));
        addPanel(row, titles[1], grayToDataUrl(b.exportMask(), w, h));
        for (const m of method === "both" ? ["pconv", "ns"] : [method]) {
            addPanel(row, `${m} (${resp.timingMs[m].toFixed(0)} ms)`, `data:image/png;base64,${resp.results[m]}`);
        }
        addPanel(row, "ground truth", rgbToDataUrl(b.image, w, h));
        const note = document.createElement("p");
        note.textContent = `r = ${b.maskRatio().toFixed(3)}, round trip ` +
            `${(performance.now() - t0).toFixed(0)} ms`;
        row.appendChild(note);
        const strip = $("history");
        strip.insertBefore(row, strip.firstChild);
    }
    catch (e) {
        if (e instanceof ApiError && e.status === 422 && e.requiredDivisor) {
            offerCenterCrop(e.requiredDivisor);
        }
        else {
            $("error").textContent = `request failed (mask kept): ${e}`;
        }
    }
    finally {
        b.requestInFlight = false;
        updateStatus();
    }
}
function offerCenterCrop(divisor) {
    if (!board)
        return;
    const rect = centerCrop(board.width, board.height, divisor);
    if (!rect) {
        $("error").textContent =
            `image too small: dims must be divisible by ${divisor}`;
        return;
    }
    const msg = `image dims must be divisible by ${divisor} — ` +
        `crop to centered ${rect.width}x${rect.height}?`;
    if (window.confirm(msg)) {
        const cropped = cropRgb(board.image, board.width, rect);
        board = new BoardState(cropped, rect.width, rect.height);
        canvas().width = rect.width;
        canvas().height = rect.height;
        redraw();
    }
    else {
        $("error").textContent = msg;
    }
}
export function init() {
    let stroke = null;
    const c = canvas();
    c.addEventListener("pointerdown", (ev) => {
        if (!board)
            return;
        const p = canvasPoint(ev);
        stroke = [p];
        c.setPointerCapture(ev.pointerId);
        // one undo entry per stroke, painted live segment by segment
        board.beginStroke();
        board.paintSegment([p]);
        redraw();
    });
    c.addEventListener("pointermove", (ev) => {
        if (!board || !stroke)
            return;
        const p = canvasPoint(ev);
        board.paintSegment([stroke[stroke.length - 1], p]);
        stroke.push(p);
        redraw();
    });
    const finish = () => {
        stroke = null;
        redraw();
    };
    c.addEventListener("pointerup", finish);
    c.addEventListener("pointercancel", finish);
    $("radius").addEventListener("input", (ev) => {
        if (board)
            board.brushRadius = Number(ev.target.value);
    });
    $("undo").addEventListener("click", () => {
        board?.undo();
        redraw();
    });
    $("clear").addEventListener("click", () => {
        board?.clearMask();
        redraw();
    });
    $("submit").addEventListener("click", () => void submit());
    void loadImage(SAMPLE_URL);
}
init();
