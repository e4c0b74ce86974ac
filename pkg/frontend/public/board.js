/**
 * Core board state: a loaded image, a paintable hole mask, and an undo
 * stack.  Pure data + logic, no DOM — the canvas layer and the tests both
 * drive it through this interface.
 *
 * Internally the mask stores 1 where the user painted a hole.  The export
 * convention is the opposite polarity (white/255 = valid, black/0 = hole),
 * matching what the inpainting service expects.
 */
export class BoardState {
    constructor(image, width, height) {
        if (image.length !== width * height * 3) {
            throw new Error(`image buffer ${image.length} != ${width}x${height}x3`);
        }
        this.width = width;
        this.height = height;
        this.image = image;
        this.mask = new Uint8Array(width * height);
        this.undoStack = [];
        this.brushRadius = 12;
        this.requestInFlight = false;
        this.history = [];
    }
    /** Snapshot the mask so the stroke being started can be undone. */
    beginStroke() {
        this.undoStack.push(this.mask.slice());
    }
    /** Paint a polyline of hole pixels; one undo-stack entry per stroke. */
    paintStroke(path, radius) {
        if (path.length === 0)
            return;
        this.beginStroke();
        this.paintSegment(path, radius);
    }
    /** Paint without touching the undo stack (live extension of a stroke). */
    paintSegment(path, radius) {
        if (path.length === 0)
            return;
        const r = radius ?? this.brushRadius;
        let prev = path[0];
        this.stampDisk(prev, r);
        for (let i = 1; i < path.length; i++) {
            // interpolate so fast strokes stay continuous
            const cur = path[i];
            const dist = Math.hypot(cur.x - prev.x, cur.y - prev.y);
            const steps = Math.max(1, Math.ceil(dist / Math.max(1, r / 2)));
            for (let s = 1; s <= steps; s++) {
                this.stampDisk({
                    x: prev.x + ((cur.x - prev.x) * s) / steps,
                    y: prev.y + ((cur.y - prev.y) * s) / steps,
                }, r);
            }
            prev = cur;
        }
    }
    stampDisk(c, r) {
        const y0 = Math.max(0, Math.floor(c.y - r));
        const y1 = Math.min(this.height - 1, Math.ceil(c.y + r));
        const x0 = Math.max(0, Math.floor(c.x - r));
        const x1 = Math.min(this.width - 1, Math.ceil(c.x + r));
        const r2 = r * r;
        for (let y = y0; y <= y1; y++) {
            for (let x = x0; x <= x1; x++) {
                const dx = x - c.x;
                const dy = y - c.y;
                if (dx * dx + dy * dy <= r2)
                    this.mask[y * this.width + x] = 1;
            }
        }
    }
    /** Restore the exact mask bitmap from before the last stroke. */
    undo() {
        const prev = this.undoStack.pop();
        if (!prev)
            return false;
        this.mask = prev;
        return true;
    }
    clearMask() {
        this.undoStack.push(this.mask.slice());
        this.mask = new Uint8Array(this.width * this.height);
    }
    get undoDepth() {
        return this.undoStack.length;
    }
    holePixelCount() {
        let n = 0;
        for (const v of this.mask)
            n += v;
        return n;
    }
    /** Fraction of pixels painted as hole (the r the user is targeting). */
    maskRatio() {
        return this.holePixelCount() / (this.width * this.height);
    }
    canSubmit() {
        return this.holePixelCount() > 0 && !this.requestInFlight;
    }
    /** Hole bitmap as painted (1 = hole), for display layers. */
    holeBitmap() {
        return this.mask.slice();
    }
    /**
     * Mask in the service polarity: 255 = valid, 0 = hole, one gray byte per
     * pixel.  Strictly binary.
     */
    exportMask() {
        const out = new Uint8Array(this.mask.length);
        for (let i = 0; i < this.mask.length; i++) {
            out[i] = this.mask[i] ? 0 : 255;
        }
        return out;
    }
    /** Re-import an exported mask (round trip used by tests and load). */
    importMask(gray) {
        if (gray.length !== this.mask.length) {
            throw new Error(`mask buffer ${gray.length} != ${this.mask.length}`);
        }
        this.undoStack.push(this.mask.slice());
        for (let i = 0; i < gray.length; i++) {
            this.mask[i] = gray[i] >= 128 ? 0 : 1;
        }
    }
    /** Masked input panel: image with hole pixels blacked out. */
    maskedInput() {
        const out = this.image.slice();
        for (let i = 0; i < this.mask.length; i++) {
            if (this.mask[i]) {
                out[3 * i] = 0;
                out[3 * i + 1] = 0;
                out[3 * i + 2] = 0;
            }
        }
        return out;
    }
}
/**
 * Largest centered crop of (width, height) whose sides divide evenly by
 * `divisor` — the fix offered on a 422 response.  Returns null when the
 * image is too small to crop to a valid size.
 */
export function centerCrop(width, height, divisor) {
    const w = Math.floor(width / divisor) * divisor;
    const h = Math.floor(height / divisor) * divisor;
    if (w < divisor || h < divisor)
        return null;
    return {
        x: Math.floor((width - w) / 2),
        y: Math.floor((height - h) / 2),
        width: w,
        height: h,
    };
}
/** Crop an RGB buffer to the given rectangle. */
export function cropRgb(src, width, rect) {
    const out = new Uint8Array(rect.width * rect.height * 3);
    for (let y = 0; y < rect.height; y++) {
        const srcOff = ((rect.y + y) * width + rect.x) * 3;
        out.set(src.subarray(srcOff, srcOff + rect.width * 3), y * rect.width * 3);
    }
    return out;
}
/** Fig.-4 panel order for a completed request. */
export function panelOrder(method) {
    if (method === "both") {
        return ["masked input", "mask", "pconv", "ns", "ground truth"];
    }
    return ["masked input", "mask", method, "ground truth"];
}
