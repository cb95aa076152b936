import { ApiClient } from "./api";
import { QueueController } from "./queue";
import { renderLabelButtons, renderState } from "./view";

const RETRY_MS = 3000;

function requireRunId(): string | null {
  const params = new URLSearchParams(window.location.search);
  return params.get("run");
}

function mount(): void {
  const root = document.getElementById("app")!;
  const runId = requireRunId();
  if (!runId) {
    root.innerHTML =
      '<p class="banner">open this console with <code>?run=&lt;run id&gt;</code></p>';
    return;
  }

  const api = new ApiClient("");
  const controller = new QueueController(api, runId);
  const stateEl = document.createElement("div");
  const buttonsEl = document.createElement("div");
  buttonsEl.className = "label-buttons";
  root.replaceChildren(stateEl, buttonsEl);

  const redraw = () => {
    stateEl.innerHTML = renderState(controller.state);
    const showButtons = controller.state.phase === "labeling";
    buttonsEl.innerHTML = showButtons ? renderLabelButtons(controller.classVocab()) : "";
  };
  controller.onChange(redraw);

  // Labels are only ever posted from these two explicit user inputs.
  buttonsEl.addEventListener("click", (event) => {
    const target = (event.target as HTMLElement).closest<HTMLElement>(".label-btn");
    if (target?.dataset.label) void controller.labelCurrent(target.dataset.label);
  });
  window.addEventListener("keydown", (event) => {
    if (controller.state.phase !== "labeling") return;
    const index = Number.parseInt(event.key, 10) - 1;
    const vocab = controller.classVocab();
    if (index >= 0 && index < vocab.length) void controller.labelCurrent(vocab[index]);
  });

  const tick = async () => {
    if (controller.state.phase === "retrying" || controller.state.phase === "loading") {
      await controller.refresh();
    }
    window.setTimeout(tick, RETRY_MS);
  };
  void controller.refresh().then(() => window.setTimeout(tick, RETRY_MS));
  redraw();
}

mount();
