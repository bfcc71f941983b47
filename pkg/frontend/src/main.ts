/** Browser entry point: create or resume a session and hand off to the
 * controller.  The service base URL and session id come from the query
 * string, so a reload lands back in the same session (the service holds
 * all state of record).
 */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (text) node.textContent = text;
  return node;
}

async function boot(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("service") ?? "");
  const sessionId = params.get("session");
  if (sessionId !== null) {
    await SessionController.resume(api, root, sessionId);
    return;
  }
  await renderLauncher(api, root);
}

async function renderLauncher(api: ApiClient, root: HTMLElement): Promise<void> {
  const { datasets } = await api.listDatasets();
  const form = el("form");
  form.className = "launcher";
  form.append(el("h2", "start a labelling session"));

  const datasetSelect = el("select");
  for (const d of datasets) {
    const option = el("option", `${d.name} (${d.nodes} nodes, ${d.classes} classes)`);
    option.value = d.name;
    datasetSelect.append(option);
  }
  const strategySelect = el("select");
  for (const name of ["pregeem", "geem", "combined", "lp-only", "random"]) {
    const option = el("option", name);
    option.value = name;
    strategySelect.append(option);
  }
  const budgetInput = el("input");
  budgetInput.type = "number";
  budgetInput.value = "10";
  budgetInput.min = "1";
  const submit = el("button", "create session");
  submit.type = "submit";

  for (const [label, control] of [
    ["dataset", datasetSelect],
    ["strategy", strategySelect],
    ["budget", budgetInput],
  ] as const) {
    const row = el("label", `${label} `);
    row.append(control);
    form.append(row);
  }
  form.append(submit);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    submit.disabled = true;
    void api
      .createSession({
        dataset: datasetSelect.value,
        strategy: strategySelect.value,
        config: { budget: Number(budgetInput.value) },
      })
      .then((created) => {
        const url = new URL(window.location.href);
        url.searchParams.set("session", created.id);
        window.location.assign(url.toString());
      })
      .catch((err: unknown) => {
        submit.disabled = false;
        const banner = el("div", err instanceof Error ? err.message : String(err));
        banner.className = "error-banner";
        form.prepend(banner);
      });
  });

  root.replaceChildren(form);
}

const app = document.getElementById("app");
if (app !== null) {
  void boot(app).catch((err: unknown) => {
    app.textContent = err instanceof Error ? err.message : String(err);
  });
}
