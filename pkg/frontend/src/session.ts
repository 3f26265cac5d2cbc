/** Session state for the human-in-the-loop feedback cycle.
 *
 * Every number shown to the user is re-fetched from the service after each
 * mutation; the client never simulates model state locally.
 */

import {
  CellInfo,
  FeedbackResult,
  GridInfo,
  GridRecClient,
  QTableInfo,
  Recommendation,
} from "./api.js";

export type OverlayMode = "users" | "items" | "maxq";

export interface FeedbackRecord {
  user: number;
  cell: [number, number];
  satisfied: boolean;
  result: FeedbackResult;
}

export interface OverlayCell {
  row: number;
  col: number;
  value: number;
  onTrace: boolean;
}

export function parseProfile(text: string): number[] {
  const ids = text
    .split(/[\s,;]+/)
    .filter((t) => t.length > 0)
    .map((t) => Number(t));
  if (ids.length === 0 || ids.some((x) => !Number.isInteger(x) || x < 1)) {
    throw new Error("profile must be a comma-separated list of positive item ids");
  }
  return [...new Set(ids)];
}

export class Session {
  lastRecommendation: Recommendation | null = null;
  grid: GridInfo | null = null;
  qTable: QTableInfo | null = null;
  overlayMode: OverlayMode = "users";
  history: FeedbackRecord[] = [];

  constructor(private client: GridRecClient) {}

  /** Fetch a recommendation round plus the overlays that frame it. */
  async sessionRound(profile: number[], n: number, k: number, epsilon = 0.1, seed = 0): Promise<Recommendation> {
    if (profile.length === 0) {
      throw new Error("profile must contain at least one item id");
    }
    const rec = await this.client.recommend(profile, n, k, epsilon, seed);
    this.lastRecommendation = rec;
    await this.refreshOverlays();
    return rec;
  }

  /** Post feedback, then re-fetch the affected cell and the whole grid. */
  async submitFeedback(user: number, cell: [number, number], satisfied: boolean): Promise<CellInfo> {
    const result = await this.client.feedback(user, cell, satisfied);
    this.history.push({ user, cell, satisfied, result });
    const fresh = await this.client.cell(cell[0], cell[1]);
    await this.refreshOverlays();
    return fresh;
  }

  async refreshOverlays(): Promise<void> {
    this.grid = await this.client.grid();
    this.qTable = await this.client.qTable();
  }

  /** Per-cell overlay values for the active mode, with the walk trace marked. */
  overlay(): OverlayCell[] {
    if (!this.grid) {
      return [];
    }
    const onTrace = new Set(
      (this.lastRecommendation?.trace ?? []).map(([r, c]) => `${r},${c}`)
    );
    return this.grid.cells.map((cell, idx) => {
      let value: number;
      if (this.overlayMode === "users") {
        value = cell.user_set_size;
      } else if (this.overlayMode === "items") {
        value = cell.item_set_size;
      } else {
        const q = this.qTable?.values[idx] ?? [];
        const finite = q.filter((v): v is number => v !== null);
        value = finite.length ? Math.max(...finite) : 0;
      }
      return {
        row: cell.row,
        col: cell.col,
        value,
        onTrace: onTrace.has(`${cell.row},${cell.col}`),
      };
    });
  }
}
