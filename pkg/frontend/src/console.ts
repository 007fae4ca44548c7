// DOM-free console session logic: discovery, plan editing with revision
// history, message/command submission with status polling. The UI layer and
// the e2e tests both drive this class.

import {
  ApiClient,
  ApiErrorBody,
  ApiRequestError,
  Link,
  collectLinks,
  linkByRel,
  linksByRel,
} from "./api.js";

export interface RouteMap {
  /** rel -> link for the root collections. */
  sections: Map<string, Link>;
  /** href -> allowed methods, accumulated from every link seen. */
  methods: Map<string, Set<string>>;
}

export interface PlanSaveOk {
  ok: true;
  revision: number;
  semver: string;
}

export interface PlanSaveError {
  ok: false;
  error: ApiErrorBody;
}

export interface StatusTracker {
  location: string;
  timeline: string[];
  final: string;
  reason: string | null;
}

const TERMINAL = new Set(["processed", "failed", "done"]);

export class ConsoleSession {
  routes: RouteMap = { sections: new Map(), methods: new Map() };

  constructor(
    readonly client: ApiClient,
    readonly pollIntervalMs = 50,
    readonly pollTimeoutMs = 15000,
  ) {}

  /** Record every link's href -> methods for the mutation audit. */
  private observe(doc: unknown): void {
    for (const link of collectLinks(doc)) {
      const set = this.routes.methods.get(link.href) ?? new Set<string>();
      link.methods.forEach((m) => set.add(m));
      this.routes.methods.set(link.href, set);
    }
  }

  async getJson(path: string): Promise<unknown> {
    const doc = await this.client.getJson(path);
    this.observe(doc);
    return doc;
  }

  /** Build navigation from the root resource; no hardcoded paths. */
  async discover(): Promise<RouteMap> {
    const root = await this.getJson("/");
    this.routes.sections = new Map();
    for (const link of collectLinks(root)) {
      if (link.rel !== "self") this.routes.sections.set(link.rel, link);
    }
    return this.routes;
  }

  sectionRels(): string[] {
    return [...this.routes.sections.keys()];
  }

  async section(rel: string): Promise<unknown> {
    const link = this.routes.sections.get(rel);
    if (link === undefined) throw new Error(`no discovered section ${rel}`);
    return this.getJson(link.href);
  }

  async agentDetail(agentHref: string): Promise<unknown> {
    return this.getJson(agentHref);
  }

  async relatedDoc(doc: unknown, rel: string): Promise<unknown> {
    const link = linkByRel(doc, rel);
    if (link === undefined) throw new Error(`resource has no ${rel} link`);
    return this.getJson(link.href);
  }

  // --- plan editing (management integration) ---

  async loadPlans(agentDoc: unknown): Promise<{ href: string; source: string; revision: number }> {
    const link = linkByRel(agentDoc, "plans");
    if (link === undefined) throw new Error("agent has no plans link");
    const doc = (await this.getJson(link.href)) as {
      source: string;
      revision: number;
    };
    return { href: link.href, source: doc.source, revision: doc.revision };
  }

  async savePlans(plansHref: string, source: string): Promise<PlanSaveOk | PlanSaveError> {
    const { status, json } = await this.client.send("PUT", plansHref, { source });
    if (status === 200) {
      this.observe(json);
      const body = json as { revision: number; semver: string };
      return { ok: true, revision: body.revision, semver: body.semver };
    }
    return { ok: false, error: json as ApiErrorBody };
  }

  async revisionList(doc: unknown): Promise<{ revision: number; semver: string }[]> {
    const revs = (await this.relatedDoc(doc, "revisions")) as {
      items: { revision: number; semver: string }[];
    };
    return revs.items;
  }

  async revisionContent(revisionsDoc: unknown, revision: number): Promise<string> {
    const link = linksByRel(revisionsDoc, "item").find((l) =>
      l.href.endsWith(`/${revision}`),
    );
    if (link === undefined) throw new Error(`no link for revision ${revision}`);
    const doc = (await this.getJson(link.href)) as { content: string };
    return doc.content;
  }

  // --- interaction integration ---

  /**
   * Cheap client-side sanity check of a term before submitting, so typos get
   * flagged without a round trip. Returns a hint string or null when ok.
   */
  precheckTerm(src: string): string | null {
    const s = src.trim();
    if (s.length === 0) return "term is empty";
    let depth = 0;
    let inString = false;
    for (let i = 0; i < s.length; i++) {
      const c = s[i];
      if (inString) {
        if (c === "\\") i++;
        else if (c === '"') inString = false;
        continue;
      }
      if (c === '"') inString = true;
      else if (c === "(" || c === "[") depth++;
      else if (c === ")" || c === "]") {
        depth--;
        if (depth < 0) return "unbalanced closing bracket";
      }
    }
    if (inString) return "unterminated string";
    if (depth !== 0) return "unbalanced parentheses";
    if (!/^[a-z_A-Z0-9"\-\[(]/.test(s)) return "terms start with an atom, variable, number, string, list, or '('";
    return null;
  }

  private async pollStatus(location: string): Promise<StatusTracker> {
    const timeline: string[] = [];
    const deadline = Date.now() + this.pollTimeoutMs;
    for (;;) {
      const doc = (await this.getJson(location)) as {
        status: string;
        reason: string | null;
      };
      if (timeline[timeline.length - 1] !== doc.status) timeline.push(doc.status);
      if (TERMINAL.has(doc.status)) {
        return { location, timeline, final: doc.status, reason: doc.reason };
      }
      if (Date.now() > deadline) {
        return { location, timeline, final: "timeout", reason: null };
      }
      await new Promise((r) => setTimeout(r, this.pollIntervalMs));
    }
  }

  async sendMessage(
    agentDoc: unknown,
    performative: string,
    content: string,
    sender = "console",
  ): Promise<StatusTracker> {
    const link = linkByRel(agentDoc, "inbox");
    if (link === undefined) throw new Error("agent has no inbox link");
    const { status, json, location } = await this.client.send("POST", link.href, {
      sender,
      performative,
      content,
    });
    if (status !== 201 || location === null) {
      throw new ApiRequestError(status, json as ApiErrorBody);
    }
    this.observe(json);
    return this.pollStatus(location);
  }

  async runCommand(agentDoc: unknown, body: string): Promise<StatusTracker> {
    const link = linkByRel(agentDoc, "command");
    if (link === undefined) throw new Error("agent has no command link");
    const { status, json, location } = await this.client.send("POST", link.href, { body });
    if (status !== 201 || location === null) {
      throw new ApiRequestError(status, json as ApiErrorBody);
    }
    this.observe(json);
    return this.pollStatus(location);
  }

  /** The one organisation mutation the API offers externally. */
  async assignRole(groupDoc: unknown, agent: string, role: string): Promise<number> {
    const link = linkByRel(groupDoc, "players");
    if (link === undefined) throw new Error("group has no players link");
    const { status } = await this.client.send("POST", link.href, { agent, role });
    return status;
  }
}
