export class ServiceError extends Error {
    constructor(code, message) {
        super(message);
        this.code = code;
    }
}
export class ApiClient {
    constructor(baseUrl, fetchImpl = (url, init) => fetch(url, init)) {
        this.baseUrl = baseUrl;
        this.fetchImpl = fetchImpl;
    }
    async request(path, body) {
        const init = body === undefined
            ? { method: "GET" }
            : {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(body),
            };
        const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        const payload = await res.json();
        if (!res.ok) {
            throw new ServiceError(payload.code ?? res.status, payload.message ?? "request failed");
        }
        return payload;
    }
    modelInfo() {
        return this.request("/api/model");
    }
    seed(options = {}) {
        return this.request("/api/seed", options);
    }
    decode(session, overrides) {
        return this.request("/api/decode", { session, overrides });
    }
    traverse(session, dim, lo, hi, steps) {
        return this.request("/api/traverse", { session, dim, lo, hi, steps });
    }
}
