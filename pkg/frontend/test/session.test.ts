import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/client.js";
import { AnnotationSession } from "../src/session.js";
import { IMPOSSIBLE, type AnnotationRecord, type AnnotationTask } from "../src/types.js";

function makeTask(id: string): AnnotationTask {
  return {
    task_id: id,
    sentence: "the red person",
    scene: {
      scene_id: "s0",
      width: 200,
      height: 100,
      rows: 2,
      cols: 2,
      render: {},
      boxes: [
        { object_id: "s0_o0", x: 10, y: 10, w: 40, h: 40 },
        { object_id: "s0_o1", x: 120, y: 30, w: 50, h: 50 },
      ],
    },
  };
}

interface FakeServer {
  client: ApiClient;
  submissions: AnnotationRecord[];
  failNextPosts: (n: number) => void;
}

function fakeServer(tasks: AnnotationTask[]): FakeServer {
  const submissions: AnnotationRecord[] = [];
  const seen = new Set<string>();
  let failPosts = 0;
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.includes("/task")) {
      const next = tasks.find((t) => !seen.has(t.task_id));
      if (!next) {
        return new Response("{}", { status: 404 });
      }
      return new Response(JSON.stringify(next), { status: 200 });
    }
    if (url.includes("/response")) {
      if (failPosts > 0) {
        failPosts -= 1;
        throw new Error("connection reset");
      }
      const rec = JSON.parse(String(init?.body)) as AnnotationRecord;
      if (seen.has(rec.task_id)) {
        return new Response("{}", { status: 409 });
      }
      if (rec.elapsed_ms <= 0) {
        return new Response("{}", { status: 400 });
      }
      seen.add(rec.task_id);
      submissions.push(rec);
      return new Response(JSON.stringify({ ...rec, correct: true, received_at: 0 }), {
        status: 201,
      });
    }
    throw new Error(`unexpected url ${url}`);
  };
  return {
    client: new ApiClient("", fetchFn, 3, 1),
    submissions,
    failNextPosts: (n) => (failPosts = n),
  };
}

function clockAt(start = 0) {
  let t = start;
  return { now: () => t, advance: (ms: number) => (t += ms) };
}

describe("AnnotationSession", () => {
  it("submits the clicked box's object id with the elapsed time", async () => {
    const server = fakeServer([makeTask("t1")]);
    const clock = clockAt();
    const session = new AnnotationSession(server.client, "w0", {}, clock.now);
    await session.advance();
    clock.advance(1500);
    const ok = await session.click(30, 30); // inside s0_o0
    expect(ok).toBe(true);
    expect(server.submissions).toEqual([
      { task_id: "t1", worker_id: "w0", chosen: "s0_o0", elapsed_ms: 1500 },
    ]);
  });

  it("ignores clicks outside every box", async () => {
    const server = fakeServer([makeTask("t1")]);
    const session = new AnnotationSession(server.client, "w0", {}, clockAt().now);
    await session.advance();
    expect(await session.click(199, 99)).toBe(false);
    expect(server.submissions).toHaveLength(0);
    expect(session.currentState).toBe("timing");
  });

  it("submits IMPOSSIBLE from the checkbox path", async () => {
    const server = fakeServer([makeTask("t1")]);
    const clock = clockAt();
    const session = new AnnotationSession(server.client, "w3", {}, clock.now);
    await session.advance();
    clock.advance(777);
    await session.impossible();
    expect(server.submissions[0]).toMatchObject({ chosen: IMPOSSIBLE, elapsed_ms: 777 });
  });

  it("blocks double submission of the same task", async () => {
    const server = fakeServer([makeTask("t1")]);
    const clock = clockAt();
    const session = new AnnotationSession(server.client, "w0", {}, clock.now);
    await session.advance();
    clock.advance(100);
    await session.click(30, 30);
    const second = await session.click(30, 30);
    expect(second).toBe(false);
    expect(server.submissions).toHaveLength(1);
  });

  it("retries a failed POST preserving the original elapsed_ms", async () => {
    const server = fakeServer([makeTask("t1")]);
    const clock = clockAt();
    const session = new AnnotationSession(server.client, "w0", {}, clock.now);
    await session.advance();
    clock.advance(2048);
    server.failNextPosts(2); // two network failures, then success
    const submitted = session.click(30, 30);
    clock.advance(5000); // time keeps passing during retries
    await submitted;
    expect(server.submissions).toEqual([
      { task_id: "t1", worker_id: "w0", chosen: "s0_o0", elapsed_ms: 2048 },
    ]);
  });

  it("arms the timer only after presentation completes", async () => {
    const server = fakeServer([makeTask("t1")]);
    const clock = clockAt();
    let renderedAt = -1;
    const session = new AnnotationSession(
      server.client,
      "w0",
      {
        present: async () => {
          clock.advance(400); // slow scene draw
          renderedAt = clock.now();
        },
      },
      clock.now,
    );
    await session.advance();
    clock.advance(100);
    await session.click(30, 30);
    expect(renderedAt).toBe(400);
    expect(server.submissions[0]!.elapsed_ms).toBe(100); // render time excluded
  });

  it("advances through every task then reports exhaustion", async () => {
    const tasks = [makeTask("t1"), makeTask("t2"), makeTask("t3")];
    const server = fakeServer(tasks);
    const clock = clockAt();
    const session = new AnnotationSession(server.client, "w0", {}, clock.now);
    const n = await session.runAll(async () => {
      clock.advance(300);
      await session.click(140, 50); // inside s0_o1
    });
    expect(n).toBe(3);
    expect(server.submissions.map((s) => s.task_id)).toEqual(["t1", "t2", "t3"]);
    expect(session.currentState).toBe("exhausted");
  });
});
