import { ApiClient } from "./client.js";
import { renderScene, renderSentence, type CanvasMapping } from "./render.js";
import { AnnotationSession } from "./session.js";
import { formatSeconds } from "./timer.js";

/** Browser bootstrap: wires the canvas, timer display, and the impossible
 * checkbox to an annotation session against the serving origin. */

function requireEl<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing #${id}`);
  }
  return el as T;
}

export async function start(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const workerId = params.get("worker") ?? `w-${Math.random().toString(36).slice(2, 8)}`;

  const canvas = requireEl<HTMLCanvasElement>("scene");
  const sentenceEl = requireEl<HTMLElement>("sentence");
  const timerEl = requireEl<HTMLElement>("timer");
  const statusEl = requireEl<HTMLElement>("status");
  const impossibleBtn = requireEl<HTMLButtonElement>("impossible");

  let mapping: CanvasMapping | null = null;
  const client = new ApiClient("");
  const session = new AnnotationSession(client, workerId, {
    present: (task) => {
      mapping = renderScene(canvas, task.scene);
      renderSentence(sentenceEl, task);
    },
    onState: (state) => {
      statusEl.textContent = state === "exhausted" ? "all tasks done, thank you" : state;
      impossibleBtn.disabled = state !== "timing";
    },
  });

  const tick = () => {
    timerEl.textContent =
      session.currentState === "timing" ? formatSeconds(session.displayElapsedMs()) : "-";
    window.requestAnimationFrame(tick);
  };
  window.requestAnimationFrame(tick);

  canvas.addEventListener("click", (ev) => {
    if (mapping === null) {
      return;
    }
    const rect = canvas.getBoundingClientRect();
    const { x, y } = mapping.toScene(ev.clientX - rect.left, ev.clientY - rect.top);
    void session.click(x, y).then((submitted) => {
      if (submitted) {
        void session.advance();
      }
    });
  });

  impossibleBtn.addEventListener("click", () => {
    void session.impossible().then((submitted) => {
      if (submitted) {
        void session.advance();
      }
    });
  });

  await session.advance();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  void start();
}
