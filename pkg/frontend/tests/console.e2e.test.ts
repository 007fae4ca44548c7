// End-to-end console tests against a real server process. The server is
// spawned once for the suite on an ephemeral port; every request the console
// makes goes into an access log that the final audit checks against the
// hypermedia-discovered route map.

import { spawn, ChildProcess } from "node:child_process";
import { once } from "node:events";
import * as path from "node:path";
import * as readline from "node:readline";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, auditMutations, collectLinks } from "../src/api.js";
import { ConsoleSession } from "../src/console.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const repoRoot = path.resolve(here, "..", "..");

let server: ChildProcess;
let baseURL: string;
let client: ApiClient;
let session: ConsoleSession;

beforeAll(async () => {
  const python = process.env.PYTHON ?? "python3";
  server = spawn(
    python,
    [
      "-m",
      "maskit",
      "serve",
      "--project",
      path.join(here, "fixtures", "project.json"),
      "--port",
      "0",
    ],
    {
      env: { ...process.env, PYTHONPATH: path.join(repoRoot, "src") },
      stdio: ["ignore", "pipe", "pipe"],
    },
  );
  const lines = readline.createInterface({ input: server.stdout! });
  const firstLine = await Promise.race([
    once(lines, "line").then(([line]) => line as string),
    new Promise<string>((_, reject) =>
      setTimeout(() => reject(new Error("server did not start")), 15000),
    ),
  ]);
  const match = /listening on (http:\/\/[\d.]+:\d+)/.exec(firstLine);
  if (!match) throw new Error(`unexpected server banner: ${firstLine}`);
  baseURL = match[1];
  client = new ApiClient(baseURL);
  session = new ConsoleSession(client, 25);
}, 30000);

afterAll(() => {
  server?.kill("SIGINT");
});

describe("discovery", () => {
  it("builds navigation from the root links, not hardcoded paths", async () => {
    const routes = await session.discover();
    const rels = new Set(session.sectionRels());
    expect(rels).toEqual(new Set(["agents", "workspaces", "organisations", "services"]));
    for (const link of routes.sections.values()) {
      expect(link.methods).toContain("GET");
    }
  });

  it("lists the fixture agent through the discovered section", async () => {
    const agents = (await session.section("agents")) as {
      items: { name: string; href: string }[];
    };
    expect(agents.items.map((i) => i.name)).toEqual(["alice"]);
  });
});

describe("edit_plans", () => {
  it("PUT round-trip bumps the revision and the UI counter matches GET revisions", async () => {
    const agents = (await session.section("agents")) as { items: { href: string }[] };
    const agent = await session.agentDetail(agents.items[0].href);
    const plans = await session.loadPlans(agent);
    expect(plans.revision).toBe(1);

    const edited = plans.source + '\n+!extra : true <- .print("extra").';
    const outcome = await session.savePlans(plans.href, edited);
    expect(outcome.ok).toBe(true);
    if (!outcome.ok) return;
    expect(outcome.revision).toBe(2);

    const revisions = await session.revisionList(agent);
    expect(revisions[revisions.length - 1].revision).toBe(outcome.revision);
    const reloaded = await session.loadPlans(agent);
    expect(reloaded.source).toBe(edited);
  });

  it("no-op save keeps the revision id", async () => {
    const agents = (await session.section("agents")) as { items: { href: string }[] };
    const agent = await session.agentDetail(agents.items[0].href);
    const plans = await session.loadPlans(agent);
    const outcome = await session.savePlans(plans.href, plans.source);
    expect(outcome.ok && outcome.revision).toBe(plans.revision);
  });

  it("syntax errors come back with a location and change nothing", async () => {
    const agents = (await session.section("agents")) as { items: { href: string }[] };
    const agent = await session.agentDetail(agents.items[0].href);
    const before = await session.loadPlans(agent);
    const outcome = await session.savePlans(before.href, "+!broken <- ???");
    expect(outcome.ok).toBe(false);
    if (outcome.ok) return;
    expect(outcome.error.code).toBe("parse-error");
    expect(outcome.error.detail?.line).toBe(1);
    const after = await session.loadPlans(agent);
    expect(after.source).toBe(before.source);
    expect(after.revision).toBe(before.revision);
  });
});

describe("send_message / run_command", () => {
  async function aliceDoc() {
    const agents = (await session.section("agents")) as { items: { href: string }[] };
    return session.agentDetail(agents.items[0].href);
  }

  it("tell reaches processed and the belief shows up", async () => {
    const agent = await aliceDoc();
    const tracker = await session.sendMessage(agent, "tell", "stock(42)");
    expect(tracker.final).toBe("processed");
    // The scheduler may outrun the first poll; whatever was observed must be
    // a forward-ordered prefix-free slice of the status lifecycle.
    const order = ["queued", "delivered", "processed"];
    const seen = tracker.timeline.map((s) => order.indexOf(s));
    expect(seen.every((v, i) => v >= 0 && (i === 0 || v > seen[i - 1]))).toBe(true);
    const beliefs = (await session.relatedDoc(agent, "beliefs")) as { beliefs: string[] };
    expect(beliefs.beliefs).toContain("stock(42)");
  });

  it("achieve with no relevant plan fails with the reason shown", async () => {
    const agent = await aliceDoc();
    const tracker = await session.sendMessage(agent, "achieve", "impossible(1)");
    expect(tracker.final).toBe("failed");
    expect(tracker.reason).toContain("no relevant plan");
  });

  it("achieve ping runs the plan and the log shows the print", async () => {
    const agent = await aliceDoc();
    const tracker = await session.sendMessage(agent, "achieve", "ping");
    expect(tracker.final).toBe("processed");
    const log = (await session.relatedDoc(agent, "log")) as { lines: string[] };
    expect(log.lines).toContain("pong");
  });

  it("unsupported performatives surface as a 422 error", async () => {
    const agent = await aliceDoc();
    await expect(
      session.sendMessage(agent, "askOne", "price(X)"),
    ).rejects.toMatchObject({ status: 422 });
  });

  it("malformed terms are caught client-side before any request", async () => {
    const logLength = client.accessLog.length;
    expect(session.precheckTerm("f(a")).toMatch(/unbalanced/);
    expect(session.precheckTerm('say("hi)')).toMatch(/unterminated|unbalanced/);
    expect(session.precheckTerm("")).toMatch(/empty/);
    expect(session.precheckTerm("count(1)")).toBeNull();
    expect(client.accessLog.length).toBe(logLength); // nothing was sent
  });

  it("commands poll to done", async () => {
    const agent = await aliceDoc();
    const tracker = await session.runCommand(agent, "+noted(1)");
    expect(tracker.final).toBe("done");
  });
});

describe("organisation view", () => {
  it("assigns a role through the group's players link", async () => {
    const orgs = (await session.section("organisations")) as {
      items: { href: string }[];
    };
    const org = await session.getJson(orgs.items[0].href);
    const groupLink = collectLinks(org).find((l) => l.rel === "group");
    expect(groupLink).toBeDefined();
    const group = await session.getJson(groupLink!.href);
    const status = await session.assignRole(group, "alice", "writer");
    expect(status).toBe(201);
    const again = (await session.getJson(groupLink!.href)) as {
      roles: { players: string[] }[];
    };
    expect(again.roles[0].players).toContain("alice");
  });
});

describe("audit", () => {
  it("every mutation went through a hypermedia-documented route", () => {
    const mutations = client.accessLog.filter(
      (e) => e.method !== "GET" && e.method !== "OPTIONS",
    );
    expect(mutations.length).toBeGreaterThan(0);
    const violations = auditMutations(client.accessLog, session.routes.methods);
    expect(violations).toEqual([]);
  });
});
