/**
 * Minimal PNG codec for 8-bit images, enough to exchange images with the
 * service from node (the browser build paints through canvas instead).
 *
 * Encoder: color type 0 (gray) or 2 (RGB), filter 0 rows.
 * Decoder: color types 0/2/4/6, all five row filters, no interlace.
 */
import * as zlib from "node:zlib";
const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
const CRC_TABLE = (() => {
    const t = new Uint32Array(256);
    for (let n = 0; n < 256; n++) {
        let c = n;
        for (let k = 0; k < 8; k++)
            c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
        t[n] = c >>> 0;
    }
    return t;
})();
function crc32(buf) {
    let c = 0xffffffff;
    for (const b of buf)
        c = CRC_TABLE[(c ^ b) & 0xff] ^ (c >>> 8);
    return (c ^ 0xffffffff) >>> 0;
}
function chunk(type, data) {
    const out = new Uint8Array(12 + data.length);
    const dv = new DataView(out.buffer);
    dv.setUint32(0, data.length);
    for (let i = 0; i < 4; i++)
        out[4 + i] = type.charCodeAt(i);
    out.set(data, 8);
    dv.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
    return out;
}
export function encodePng(data, width, height, channels) {
    if (data.length !== width * height * channels) {
        throw new Error(`buffer ${data.length} != ${width}x${height}x${channels}`);
    }
    const ihdr = new Uint8Array(13);
    const dv = new DataView(ihdr.buffer);
    dv.setUint32(0, width);
    dv.setUint32(4, height);
    ihdr[8] = 8; // bit depth
    ihdr[9] = channels === 3 ? 2 : 0; // color type
    const stride = width * channels;
    const raw = new Uint8Array((stride + 1) * height);
    for (let y = 0; y < height; y++) {
        raw[y * (stride + 1)] = 0; // filter 0
        raw.set(data.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
    }
    const idat = new Uint8Array(zlib.deflateSync(raw));
    const parts = [
        new Uint8Array(SIGNATURE),
        chunk("IHDR", ihdr),
        chunk("IDAT", idat),
        chunk("IEND", new Uint8Array(0)),
    ];
    const total = parts.reduce((n, p) => n + p.length, 0);
    const out = new Uint8Array(total);
    let off = 0;
    for (const p of parts) {
        out.set(p, off);
        off += p.length;
    }
    return out;
}
function paeth(a, b, c) {
    const p = a + b - c;
    const pa = Math.abs(p - a);
    const pb = Math.abs(p - b);
    const pc = Math.abs(p - c);
    if (pa <= pb && pa <= pc)
        return a;
    if (pb <= pc)
        return b;
    return c;
}
export function decodePng(png) {
    for (let i = 0; i < 8; i++) {
        if (png[i] !== SIGNATURE[i])
            throw new Error("not a PNG file");
    }
    const dv = new DataView(png.buffer, png.byteOffset, png.byteLength);
    let off = 8;
    let width = 0;
    let height = 0;
    let channels = 0;
    const idat = [];
    while (off < png.length) {
        const len = dv.getUint32(off);
        const type = String.fromCharCode(png[off + 4], png[off + 5], png[off + 6], png[off + 7]);
        const data = png.subarray(off + 8, off + 8 + len);
        if (type === "IHDR") {
            width = dv.getUint32(off + 8);
            height = dv.getUint32(off + 12);
            const depth = data[8];
            const color = data[9];
            const interlace = data[12];
            if (depth !== 8)
                throw new Error(`unsupported bit depth ${depth}`);
            if (interlace !== 0)
                throw new Error("interlaced PNG not supported");
            const byColor = { 0: 1, 2: 3, 4: 2, 6: 4 };
            if (!(color in byColor)) {
                throw new Error(`unsupported color type ${color}`);
            }
            channels = byColor[color];
        }
        else if (type === "IDAT") {
            idat.push(data);
        }
        else if (type === "IEND") {
            break;
        }
        off += 12 + len;
    }
    if (!width || !height || !channels)
        throw new Error("missing IHDR");
    const total = idat.reduce((n, p) => n + p.length, 0);
    const compressed = new Uint8Array(total);
    let o = 0;
    for (const p of idat) {
        compressed.set(p, o);
        o += p.length;
    }
    const raw = new Uint8Array(zlib.inflateSync(compressed));
    const stride = width * channels;
    if (raw.length !== (stride + 1) * height) {
        throw new Error("decompressed size mismatch");
    }
    const out = new Uint8Array(stride * height);
    for (let y = 0; y < height; y++) {
        const filter = raw[y * (stride + 1)];
        const row = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
        const cur = out.subarray(y * stride, (y + 1) * stride);
        const prev = y > 0
            ? out.subarray((y - 1) * stride, y * stride)
            : new Uint8Array(stride);
        for (let x = 0; x < stride; x++) {
            const a = x >= channels ? cur[x - channels] : 0;
            const b = prev[x];
            const c = x >= channels ? prev[x - channels] : 0;
            let v = row[x];
            switch (filter) {
                case 0: break;
                case 1:
                    v = (v + a) & 0xff;
                    break;
                case 2:
                    v = (v + b) & 0xff;
                    break;
                case 3:
                    v = (v + ((a + b) >> 1)) & 0xff;
                    break;
                case 4:
                    v = (v + paeth(a, b, c)) & 0xff;
                    break;
                default: throw new Error(`unknown row filter ${filter}`);
            }
            cur[x] = v;
        }
    }
    return { width, height, channels, data: out };
}
/** Any supported decode, reduced to 3-channel RGB. */
export function decodeRgb(png) {
    const d = decodePng(png);
    if (d.channels === 3)
        return d;
    const rgb = new Uint8Array(d.width * d.height * 3);
    for (let i = 0; i < d.width * d.height; i++) {
        if (d.channels === 1) {
            rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = d.data[i];
        }
        else if (d.channels === 2) {
            rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = d.data[2 * i];
        }
        else {
            rgb[3 * i] = d.data[4 * i];
            rgb[3 * i + 1] = d.data[4 * i + 1];
            rgb[3 * i + 2] = d.data[4 * i + 2];
        }
    }
    return { width: d.width, height: d.height, channels: 3, data: rgb };
}
