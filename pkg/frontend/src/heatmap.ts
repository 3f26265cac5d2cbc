/** Renders the n x n grid overlay as a colored table of cells. */

import { OverlayCell } from "./session.js";

function color(value: number, max: number): string {
  if (max <= 0) {
    return "rgb(240,240,245)";
  }
  const t = Math.min(1, value / max);
  const r = Math.round(245 - 160 * t);
  const g = Math.round(247 - 90 * t);
  const b = Math.round(250 - 20 * t);
  return `rgb(${r},${g},${b})`;
}

export function renderHeatmap(
  container: HTMLElement,
  n: number,
  cells: OverlayCell[],
  onCellClick: (row: number, col: number) => void
): void {
  container.innerHTML = "";
  container.style.display = "grid";
  container.style.gridTemplateColumns = `repeat(${n}, 1fr)`;
  const max = Math.max(0, ...cells.map((c) => c.value));
  const byCell = new Map(cells.map((c) => [`${c.row},${c.col}`, c]));
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      const cell = byCell.get(`${r},${c}`);
      const div = document.createElement("div");
      div.className = "cell" + (cell?.onTrace ? " trace" : "");
      div.title = `(${r}, ${c}): ${cell?.value ?? 0}`;
      div.textContent = n <= 12 ? String(cell?.value ?? 0) : "";
      div.style.background = color(cell?.value ?? 0, max);
      if (cell?.onTrace) {
        div.style.outline = "2px solid #d4662a";
        div.style.outlineOffset = "-2px";
      }
      div.onclick = () => onCellClick(r, c);
      container.appendChild(div);
    }
  }
}
