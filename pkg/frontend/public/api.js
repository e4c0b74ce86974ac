/** Typed client for the inpainting service HTTP API. */
export class ApiError extends Error {
    constructor(status, message, requiredDivisor) {
        super(message);
        this.status = status;
        this.requiredDivisor = requiredDivisor;
    }
}
function b64ToBytes(b64) {
    if (typeof atob === "function") {
        const bin = atob(b64);
        const out = new Uint8Array(bin.length);
        for (let i = 0; i < bin.length; i++)
            out[i] = bin.charCodeAt(i);
        return out;
    }
    return new Uint8Array(Buffer.from(b64, "base64"));
}
export async function health(baseUrl) {
    try {
        const r = await fetch(`${baseUrl}/api/health`);
        return r.ok;
    }
    catch {
        return false;
    }
}
export async function inpaint(baseUrl, imagePng, maskPng, method) {
    const form = new FormData();
    form.append("image", new Blob([imagePng], { type: "image/png" }), "image.png");
    form.append("mask", new Blob([maskPng], { type: "image/png" }), "mask.png");
    let r;
    try {
        r = await fetch(`${baseUrl}/api/inpaint?method=${method}`, {
            method: "POST",
            body: form,
        });
    }
    catch (e) {
        throw new ApiError(0, `service unreachable: ${e}`);
    }
    if (!r.ok) {
        let detail = `${r.status}`;
        let divisor;
        try {
            const body = await r.json();
            detail = body.detail ?? detail;
            divisor = body.required_divisor;
        }
        catch {
            /* non-JSON error body */
        }
        throw new ApiError(r.status, detail, divisor);
    }
    const body = await r.json();
    return { results: body.results, timingMs: body.timing_ms };
}
export function decodeResultPanels(resp) {
    const out = {};
    for (const [method, b64] of Object.entries(resp.results)) {
        out[method] = b64ToBytes(b64);
    }
    return out;
}
