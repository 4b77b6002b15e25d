/**
 * Typed client for the toolchain HTTP API. All compilation and diff logic
 * stays on the server; this file only moves JSON.
 */
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
    }
}
async function throwFrom(response) {
    let detail = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        detail = body.error ?? body.detail ?? detail;
    }
    catch {
        /* non-JSON error body */
    }
    throw new ApiError(detail, response.status);
}
export class ApiClient {
    constructor(baseUrl = "") {
        this.baseUrl = baseUrl;
    }
    async post(path, body) {
        const response = await fetch(this.baseUrl + path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
        if (!response.ok)
            await throwFrom(response);
        return response;
    }
    async get(path) {
        const response = await fetch(this.baseUrl + path);
        if (!response.ok)
            await throwFrom(response);
        return response;
    }
    async health() {
        return (await this.get("/api/health")).json();
    }
    async extract(imageBase64, mediaType = "image/png") {
        const response = await this.post("/api/extract", {
            image: imageBase64,
            media_type: mediaType,
        });
        return response.json();
    }
    async compile(source, target) {
        const response = await this.post("/api/compile", { source, target });
        const raw = await response.text();
        return { bundle: JSON.parse(raw), raw };
    }
    async diff(source, target) {
        return (await this.post("/api/diff", { source, target })).json();
    }
    async submitEdit(body) {
        return (await this.post("/api/edit", body)).json();
    }
    async runView(runId) {
        return (await this.get(`/api/runs/${runId}`)).json();
    }
    async listRuns() {
        return (await this.get("/api/runs")).json();
    }
    runImageUrl(runId, which) {
        return `${this.baseUrl}/api/runs/${runId}/image/${which}`;
    }
}
