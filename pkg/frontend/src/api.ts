// Hypermedia client for the maskit REST API. Navigation is driven entirely
// by the links in server responses plus OPTIONS; the console never hardcodes
// resource paths, so it keeps working if the server renames routes.

export interface Link {
  rel: string;
  href: string;
  methods: string[];
}

export interface AccessEntry {
  method: string;
  path: string;
  status: number;
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
  detail?: { line?: number; column?: number; expected?: string[] };
}

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody | null,
  ) {
    super(body?.message ?? `request failed with status ${status}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function isLink(value: unknown): value is Link {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.rel === "string" &&
    typeof v.href === "string" &&
    Array.isArray(v.methods)
  );
}

/** Every link object anywhere in a representation. */
export function collectLinks(doc: unknown): Link[] {
  const found: Link[] = [];
  const visit = (node: unknown): void => {
    if (Array.isArray(node)) {
      node.forEach(visit);
    } else if (typeof node === "object" && node !== null) {
      if (isLink(node)) found.push(node);
      Object.values(node).forEach(visit);
    }
  };
  visit(doc);
  return found;
}

export function linkByRel(doc: unknown, rel: string): Link | undefined {
  return collectLinks(doc).find((l) => l.rel === rel);
}

export function linksByRel(doc: unknown, rel: string): Link[] {
  return collectLinks(doc).filter((l) => l.rel === rel);
}

export class ApiClient {
  readonly accessLog: AccessEntry[] = [];
  private readonly fetchImpl: FetchLike;

  constructor(
    public readonly baseURL: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private url(path: string): string {
    return this.baseURL.replace(/\/$/, "") + path;
  }

  async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<{ status: number; json: unknown; headers: Headers }> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const resp = await this.fetchImpl(this.url(path), init);
    this.accessLog.push({ method, path, status: resp.status });
    let json: unknown = null;
    const text = await resp.text();
    if (text.length > 0) {
      try {
        json = JSON.parse(text);
      } catch {
        json = null;
      }
    }
    return { status: resp.status, json, headers: resp.headers };
  }

  async getJson(path: string): Promise<unknown> {
    const { status, json } = await this.request("GET", path);
    if (status !== 200) throw new ApiRequestError(status, json as ApiErrorBody);
    return json;
  }

  async send(
    method: "POST" | "PUT" | "DELETE",
    path: string,
    body?: unknown,
  ): Promise<{ status: number; json: unknown; location: string | null }> {
    const { status, json, headers } = await this.request(method, path, body);
    return { status, json, location: headers.get("location") };
  }

  async allowedMethods(path: string): Promise<string[]> {
    const { status, headers } = await this.request("OPTIONS", path);
    if (status !== 200) return [];
    return (headers.get("allow") ?? "").split(",").filter(Boolean);
  }
}

/**
 * Audit the access log against hypermedia-discovered routes: every mutating
 * request must target an href whose advertised link methods (or OPTIONS
 * allow set) include that verb. Returns the violations.
 */
export function auditMutations(
  log: AccessEntry[],
  discovered: Map<string, Set<string>>,
): AccessEntry[] {
  return log.filter((entry) => {
    if (entry.method === "GET" || entry.method === "OPTIONS") return false;
    const methods = discovered.get(entry.path);
    return methods === undefined || !methods.has(entry.method);
  });
}
