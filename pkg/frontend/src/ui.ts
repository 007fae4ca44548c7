// DOM rendering for the console. Only ever renders confirmed server state:
// every panel redraw starts from fresh GET responses (no optimistic UI).

import { ApiRequestError, linkByRel, linksByRel } from "./api.js";
import { ConsoleSession, StatusTracker } from "./console.js";

const SECTION_LABELS: Record<string, string> = {
  agents: "Agents",
  workspaces: "Workspaces",
  organisations: "Organisations",
  services: "Services",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  node.append(...children);
  return node;
}

function statusChip(text: string): HTMLElement {
  return el("span", { class: `chip chip-${text}` }, text);
}

export class ConsoleApp {
  private nav = document.getElementById("nav")!;
  private panel = document.getElementById("panel")!;
  private banner = document.getElementById("banner")!;
  private pollTimer: number | null = null;

  constructor(private session: ConsoleSession) {}

  async start(): Promise<void> {
    for (;;) {
      try {
        await this.session.discover();
        this.banner.hidden = true;
        break;
      } catch {
        this.banner.hidden = false;
        this.banner.textContent = `cannot reach ${this.session.client.baseURL}; retrying...`;
        await new Promise((r) => setTimeout(r, 1500));
      }
    }
    this.renderNav();
    const first = this.session.sectionRels()[0];
    if (first !== undefined) await this.showSection(first);
  }

  private renderNav(): void {
    this.nav.replaceChildren();
    for (const rel of this.session.sectionRels()) {
      const label = SECTION_LABELS[rel] ?? rel;
      const button = el("button", { class: "nav-item" }, label);
      button.onclick = () => void this.showSection(rel);
      this.nav.append(button);
    }
  }

  private setPanel(...nodes: (Node | string)[]): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
    this.panel.replaceChildren(...nodes);
  }

  private async showSection(rel: string): Promise<void> {
    const doc = (await this.session.section(rel)) as Record<string, unknown>;
    if (rel === "agents") return this.renderAgents(doc);
    if (rel === "services") return this.renderServices(doc);
    const title = SECTION_LABELS[rel] ?? rel;
    const items = (doc.items as { name: string; href: string }[]) ?? [];
    const list = el("ul", { class: "item-list" });
    for (const item of items) {
      const link = el("a", { href: "#" }, item.name);
      link.onclick = (e) => {
        e.preventDefault();
        void this.renderResource(item.href);
      };
      list.append(el("li", {}, link));
    }
    this.setPanel(el("h2", {}, title), items.length ? list : el("p", {}, "none yet"));
  }

  private async renderAgents(doc: Record<string, unknown>): Promise<void> {
    const items = (doc.items as { name: string; href: string }[]) ?? [];
    const list = el("ul", { class: "item-list" });
    for (const item of items) {
      const link = el("a", { href: "#" }, item.name);
      link.onclick = (e) => {
        e.preventDefault();
        void this.renderAgent(item.href);
      };
      list.append(el("li", {}, link));
    }
    this.setPanel(el("h2", {}, "Agents"), items.length ? list : el("p", {}, "none yet"));
  }

  private async renderAgent(href: string): Promise<void> {
    const agent = (await this.session.agentDetail(href)) as Record<string, unknown>;
    const name = agent.name as string;
    const beliefsBox = el("pre", { class: "mono" });
    const logBox = el("pre", { class: "mono" });

    const refresh = async () => {
      const fresh = (await this.session.agentDetail(href)) as Record<string, unknown>;
      beliefsBox.textContent = ((fresh.beliefs as string[]) ?? []).join("\n") || "(none)";
      const logLink = linkByRel(fresh, "log");
      if (logLink !== undefined) {
        const log = (await this.session.getJson(logLink.href)) as { lines: string[] };
        logBox.textContent = log.lines.slice(-20).join("\n") || "(empty)";
      }
    };

    // --- plans editor ---
    const plans = await this.session.loadPlans(agent);
    const editor = el("textarea", { class: "editor", rows: "10" }) as HTMLTextAreaElement;
    editor.value = plans.source;
    const revLabel = el("span", { class: "rev" }, `revision ${plans.revision}`);
    const saveMsg = el("div", { class: "save-msg" });
    const revList = el("ul", { class: "item-list small" });

    const refreshRevisions = async () => {
      const items = await this.session.revisionList(agent);
      revList.replaceChildren(
        ...items.map((r) => el("li", {}, `r${r.revision} (${r.semver})`)),
      );
    };

    const saveButton = el("button", {}, "Save plans");
    saveButton.onclick = async () => {
      const outcome = await this.session.savePlans(plans.href, editor.value);
      if (outcome.ok) {
        revLabel.textContent = `revision ${outcome.revision}`;
        saveMsg.textContent = `saved as ${outcome.semver}`;
        saveMsg.className = "save-msg ok";
        await refreshRevisions();
      } else {
        const detail = outcome.error.detail;
        const where = detail?.line !== undefined ? ` (line ${detail.line}, column ${detail.column})` : "";
        saveMsg.textContent = `${outcome.error.message}${where}`;
        saveMsg.className = "save-msg err";
      }
    };

    // --- message form ---
    const performative = el("select", {}) as HTMLSelectElement;
    for (const p of ["tell", "untell", "achieve", "signal"]) {
      performative.append(el("option", { value: p }, p));
    }
    const content = el("input", { class: "term-input", placeholder: "count(1)" }) as HTMLInputElement;
    const timeline = el("div", { class: "timeline" });
    const sendButton = el("button", {}, "Send message");
    sendButton.onclick = async () => {
      const hint = this.session.precheckTerm(content.value);
      if (hint !== null) {
        timeline.replaceChildren(el("span", { class: "err" }, `not sent: ${hint}`));
        return;
      }
      timeline.replaceChildren(statusChip("sending"));
      try {
        const tracker = await this.session.sendMessage(agent, performative.value, content.value);
        this.renderTimeline(timeline, tracker);
      } catch (e) {
        const msg = e instanceof ApiRequestError ? e.message : String(e);
        timeline.replaceChildren(el("span", { class: "err" }, msg));
      }
      await refresh();
    };

    // --- command form ---
    const commandInput = el("input", { class: "term-input", placeholder: '+flag(1); .print("hi")' }) as HTMLInputElement;
    const commandTimeline = el("div", { class: "timeline" });
    const commandButton = el("button", {}, "Run command");
    commandButton.onclick = async () => {
      commandTimeline.replaceChildren(statusChip("sending"));
      try {
        const tracker = await this.session.runCommand(agent, commandInput.value);
        this.renderTimeline(commandTimeline, tracker);
      } catch (e) {
        const msg = e instanceof ApiRequestError ? e.message : String(e);
        commandTimeline.replaceChildren(el("span", { class: "err" }, msg));
      }
      await refresh();
    };

    this.setPanel(
      el("h2", {}, `Agent ${name}`),
      el("div", { class: "columns" },
        el("section", {},
          el("h3", {}, "Plans ", revLabel),
          editor,
          el("div", {}, saveButton, saveMsg),
          el("h4", {}, "Revisions"),
          revList,
        ),
        el("section", {},
          el("h3", {}, "Beliefs"),
          beliefsBox,
          el("h3", {}, "Log"),
          logBox,
          el("h3", {}, "Message"),
          el("div", { class: "form-row" }, performative, content, sendButton),
          timeline,
          el("h3", {}, "Command"),
          el("div", { class: "form-row" }, commandInput, commandButton),
          commandTimeline,
        ),
      ),
    );
    await refresh();
    await refreshRevisions();
    this.pollTimer = window.setInterval(() => void refresh(), 2000);
  }

  private renderTimeline(container: HTMLElement, tracker: StatusTracker): void {
    container.replaceChildren(
      ...tracker.timeline.map(statusChip),
      tracker.reason !== null ? el("span", { class: "err" }, ` ${tracker.reason}`) : "",
    );
  }

  private async renderServices(doc: Record<string, unknown>): Promise<void> {
    const services = (doc.services as Record<string, string[]>) ?? {};
    const list = el("ul", { class: "item-list" });
    for (const [label, providers] of Object.entries(services)) {
      list.append(el("li", {}, `${label}: ${providers.join(", ") || "(no providers)"}`));
    }
    this.setPanel(
      el("h2", {}, "Services"),
      Object.keys(services).length ? list : el("p", {}, "none registered"),
    );
  }

  /** Generic read-only view for workspaces/organisations with drill-down. */
  private async renderResource(href: string): Promise<void> {
    const doc = (await this.session.getJson(href)) as Record<string, unknown>;
    const pre = el("pre", { class: "mono" }, JSON.stringify(stripLinks(doc), null, 2));
    const related = el("div", { class: "related" });
    const seen = new Set<string>([href]);
    for (const link of linksByRel(doc, "artifact")
      .concat(linksByRel(doc, "group"))
      .concat(linksByRel(doc, "scheme"))) {
      if (seen.has(link.href)) continue;
      seen.add(link.href);
      const a = el("a", { href: "#" }, link.href);
      a.onclick = (e) => {
        e.preventDefault();
        void this.renderResource(link.href);
      };
      related.append(a, " ");
    }
    const nodes: (Node | string)[] = [el("h2", {}, href), pre, related];
    const players = linkByRel(doc, "players");
    if (players !== undefined) nodes.push(this.roleForm(doc));
    this.setPanel(...nodes);
  }

  /** Role assignment: the only organisation mutation the API exposes. */
  private roleForm(groupDoc: Record<string, unknown>): HTMLElement {
    const agent = el("input", { placeholder: "agent" }) as HTMLInputElement;
    const role = el("input", { placeholder: "role" }) as HTMLInputElement;
    const outcome = el("span", {});
    const button = el("button", {}, "Assign role");
    button.onclick = async () => {
      const status = await this.session.assignRole(groupDoc, agent.value, role.value);
      outcome.textContent = status === 201 ? "assigned" : `failed (${status})`;
      outcome.className = status === 201 ? "ok" : "err";
    };
    return el("div", { class: "form-row" }, agent, role, button, outcome);
  }
}

function stripLinks(doc: unknown): unknown {
  if (Array.isArray(doc)) return doc.map(stripLinks);
  if (typeof doc === "object" && doc !== null) {
    const out: Record<string, unknown> = {};
    for (const [k, v] of Object.entries(doc)) {
      if (k !== "links") out[k] = stripLinks(v);
    }
    return out;
  }
  return doc;
}
