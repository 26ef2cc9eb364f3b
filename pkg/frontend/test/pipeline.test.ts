/**
 * End-to-end pipeline: five scripted sessions annotate a 10-sentence
 * fixture against the real serving process; the collected records, fed
 * through rank-build, must equal the offline ranking of the very same
 * responses, and rejected submissions must never reach the record log.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { boxCenter } from "../src/hittest.js";
import { AnnotationSession } from "../src/session.js";
import { IMPOSSIBLE, type AnnotationRecord } from "../src/types.js";

const PY = process.env.REFLAB_PYTHON ?? "python3";
const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const WORKERS = ["w0", "w1", "w2", "w3", "w4"];

let workdir: string;
let server: ChildProcess | null = null;
let targets: Record<string, string> = {};

function fnv1a(s: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < s.length; i++) {
    h ^= s.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

function runPy(args: string[], cwd: string): void {
  const res = spawnSync(PY, ["-m", "reflab.cli", ...args], {
    cwd,
    encoding: "utf-8",
    timeout: 240_000,
  });
  if (res.status !== 0) {
    throw new Error(`reflab ${args.join(" ")} failed:\n${res.stdout}\n${res.stderr}`);
  }
}

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/progress`);
      if (res.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "reflab-ui-"));
  writeFileSync(
    join(workdir, "config.yaml"),
    [
      "dataset: ds.jsonl",
      "out_dir: out",
      "model: {d: 8, diff_slots: 2, max_len: 8}",
      "gen: {num_scenes: 5, rows: 2, cols: 2, d: 8, local_rows: 2, local_cols: 2,",
      " max_objects: 3, targets_per_scene: 1, sentences_per_target: 2, seed: 21}",
      `serve: {port: ${PORT}, workers_per_sentence: 5}`,
    ].join("\n"),
  );
  runPy(["gen-synth", "--config", "config.yaml"], workdir);

  // target object of every sentence, straight from the dataset file
  for (const line of readFileSync(join(workdir, "ds.jsonl"), "utf-8").split("\n")) {
    if (!line.trim()) continue;
    const rec = JSON.parse(line) as { kind: string; sentence_id?: string; object_id?: string };
    if (rec.kind === "sentence") {
      targets[rec.sentence_id!] = rec.object_id!;
    }
  }
  expect(Object.keys(targets)).toHaveLength(10);

  server = spawn(PY, ["-m", "reflab.cli", "serve", "--config", "config.yaml"], {
    cwd: workdir,
    stdio: "ignore",
  });
  await waitForServer();
}, 120_000);

afterAll(() => {
  server?.kill();
});

describe("scripted annotation pipeline", () => {
  const collected: AnnotationRecord[] = [];

  it("five scripted sessions annotate every task exactly once", async () => {
    for (const workerId of WORKERS) {
      let now = 0;
      const clock = () => now;
      const client = new ApiClient(BASE, (u, i) => fetch(u, i), 3, 50);
      const session = new AnnotationSession(
        client,
        workerId,
        {
          onSubmitted: (taskId, chosen, elapsedMs) =>
            collected.push({
              task_id: taskId,
              worker_id: workerId,
              chosen,
              elapsed_ms: elapsedMs,
            }),
        },
        clock,
      );
      const n = await session.runAll(async (task) => {
        const h = fnv1a(`${task.task_id}:${workerId}`);
        now += 700 + 130 * (h % 9); // deterministic "reading + search" time
        if (h % 7 === 0) {
          await session.impossible();
          return;
        }
        const boxes = task.scene.boxes;
        const pick = boxes[h % boxes.length]!;
        const c = boxCenter(pick);
        const submitted = await session.click(c.x, c.y);
        expect(submitted).toBe(true);
      });
      expect(n).toBe(10);
    }
    expect(collected).toHaveLength(50);
  }, 120_000);

  it("rejects bad submissions without touching the record log", async () => {
    const before = ((await (await fetch(`${BASE}/progress`)).json()) as { responses: number })
      .responses;
    const dup = collected[0]!;
    const dupRes = await fetch(`${BASE}/response`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(dup),
    });
    expect(dupRes.status).toBe(409);
    const badElapsed = await fetch(`${BASE}/response`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        task_id: dup.task_id,
        worker_id: "w-new",
        chosen: dup.chosen,
        elapsed_ms: 0,
      }),
    });
    expect(badElapsed.status).toBe(400);
    const after = ((await (await fetch(`${BASE}/progress`)).json()) as { responses: number })
      .responses;
    expect(after).toBe(before);
  });

  it("served records rank identically to the offline path", () => {
    // offline twin: the very same responses written directly to a log
    const offline = collected
      .map((r) =>
        JSON.stringify({
          task_id: r.task_id,
          worker_id: r.worker_id,
          chosen: r.chosen,
          correct: r.chosen !== IMPOSSIBLE && r.chosen === targets[r.task_id],
          elapsed_ms: r.elapsed_ms,
          received_at: 0,
        }),
      )
      .join("\n");
    writeFileSync(join(workdir, "offline.jsonl"), offline + "\n");

    runPy(
      ["rank-build", "--config", "config.yaml", "--records", "out/responses.jsonl",
       "-o", "ranks_served.json"],
      workdir,
    );
    runPy(
      ["rank-build", "--config", "config.yaml", "--records", "offline.jsonl",
       "-o", "ranks_offline.json"],
      workdir,
    );
    const served = JSON.parse(readFileSync(join(workdir, "ranks_served.json"), "utf-8"));
    const offlineRanks = JSON.parse(readFileSync(join(workdir, "ranks_offline.json"), "utf-8"));
    expect(served).toEqual(offlineRanks);
    expect(Object.keys(served).length).toBeGreaterThan(0);
  }, 120_000);

  it("record log holds exactly the accepted submissions", () => {
    const lines = readFileSync(join(workdir, "out", "responses.jsonl"), "utf-8")
      .split("\n")
      .filter((l) => l.trim())
      .map((l) => JSON.parse(l) as AnnotationRecord);
    expect(lines).toHaveLength(50);
    const keys = new Set(lines.map((r) => `${r.task_id}:${r.worker_id}`));
    expect(keys.size).toBe(50); // no duplicates slipped in
    for (const rec of lines) {
      expect(rec.elapsed_ms).toBeGreaterThan(0);
    }
  });
});
