/** Wires the session logic to the page. */

import { GridRecClient } from "./api.js";
import { renderHeatmap } from "./heatmap.js";
import { OverlayMode, Session, parseProfile } from "./session.js";

const client = new GridRecClient("");
const session = new Session(client);

const $ = (id: string) => document.getElementById(id)!;

function showError(message: string): void {
  const banner = $("error-banner");
  banner.textContent = message;
  banner.style.display = "block";
}

function clearError(): void {
  $("error-banner").style.display = "none";
}

function redrawHeatmap(): void {
  if (!session.grid) {
    return;
  }
  renderHeatmap($("heatmap"), session.grid.n, session.overlay(), (row, col) => {
    ($("fb-row") as HTMLInputElement).value = String(row);
    ($("fb-col") as HTMLInputElement).value = String(col);
  });
}

function renderItems(): void {
  const list = $("items");
  list.innerHTML = "";
  const rec = session.lastRecommendation;
  if (!rec) {
    return;
  }
  for (const item of rec.items) {
    const li = document.createElement("li");
    li.textContent =
      `item ${item.item} — cell (${item.cell[0]}, ${item.cell[1]}), ` +
      `${item.users} users, ${item.items} items in group`;
    li.onclick = () => {
      ($("fb-row") as HTMLInputElement).value = String(item.cell[0]);
      ($("fb-col") as HTMLInputElement).value = String(item.cell[1]);
    };
    list.appendChild(li);
  }
  $("trace").textContent = "walk: " + rec.trace.map(([r, c]) => `(${r},${c})`).join(" → ");
}

function renderHistory(): void {
  const list = $("history");
  list.innerHTML = "";
  for (const rec of [...session.history].reverse().slice(0, 12)) {
    const li = document.createElement("li");
    li.textContent =
      `user ${rec.user} ${rec.satisfied ? "liked" : "disliked"} cell ` +
      `(${rec.cell[0]}, ${rec.cell[1]}) → |U|=${rec.result.new_user_set_size}` +
      (rec.result.retrained ? ", retrained" : "");
    list.appendChild(li);
  }
}

async function onRecommend(): Promise<void> {
  clearError();
  let profile: number[];
  try {
    profile = parseProfile(($("profile") as HTMLInputElement).value);
  } catch (err) {
    showError((err as Error).message);
    return;
  }
  const n = Number(($("top-n") as HTMLInputElement).value) || 30;
  const k = Number(($("starts-k") as HTMLInputElement).value) || 3;
  try {
    await session.sessionRound(profile, n, k);
    renderItems();
    redrawHeatmap();
  } catch (err) {
    showError(`recommendation failed: ${(err as Error).message}`);
  }
}

async function onFeedback(satisfied: boolean): Promise<void> {
  clearError();
  const user = Number(($("fb-user") as HTMLInputElement).value);
  const row = Number(($("fb-row") as HTMLInputElement).value);
  const col = Number(($("fb-col") as HTMLInputElement).value);
  if (!Number.isInteger(user) || user < 1) {
    showError("enter a positive user id before sending feedback");
    return;
  }
  try {
    await session.submitFeedback(user, [row, col], satisfied);
    renderHistory();
    redrawHeatmap();
  } catch (err) {
    showError(`feedback failed: ${(err as Error).message}`);
  }
}

function init(): void {
  $("recommend").onclick = () => void onRecommend();
  $("fb-like").onclick = () => void onFeedback(true);
  $("fb-dislike").onclick = () => void onFeedback(false);
  $("overlay-mode").onchange = () => {
    session.overlayMode = ($("overlay-mode") as HTMLSelectElement).value as OverlayMode;
    redrawHeatmap();
  };
  void session
    .refreshOverlays()
    .then(redrawHeatmap)
    .catch((err) => showError(`cannot reach the service: ${(err as Error).message}`));
}

init();
