/** Typed client for the recommendation service's /v1 JSON API. */

export interface RecommendedItem {
  item: number;
  cell: [number, number];
  users: number;
  items: number;
}

export interface Recommendation {
  items: RecommendedItem[];
  trace: [number, number][];
}

export interface CellInfo {
  row: number;
  col: number;
  user_set_size: number;
  item_set_size: number;
}

export interface GridInfo {
  n: number;
  cells: CellInfo[];
}

export interface QTableInfo {
  n: number;
  actions: string[];
  values: (number | null)[][];
}

export interface FeedbackResult {
  applied: boolean;
  new_user_set_size: number;
  retrained: boolean;
}

export interface HealthInfo {
  status: string;
  model_version: number;
  feedback_seq: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    const body = await resp.text();
    throw new ApiError(resp.status, `${resp.status} on ${path}: ${body}`);
  }
  return (await resp.json()) as T;
}

export class GridRecClient {
  constructor(private base: string = "") {}

  recommend(profile: number[], n: number, k: number, epsilon = 0.1, seed = 0): Promise<Recommendation> {
    return request<Recommendation>(this.base, "/v1/recommendations", {
      method: "POST",
      body: JSON.stringify({ profile, n, k, epsilon, seed }),
    });
  }

  feedback(user: number, cell: [number, number], satisfied: boolean): Promise<FeedbackResult> {
    return request<FeedbackResult>(this.base, "/v1/feedback", {
      method: "POST",
      body: JSON.stringify({ user, cell, satisfied }),
    });
  }

  grid(): Promise<GridInfo> {
    return request<GridInfo>(this.base, "/v1/grid");
  }

  qTable(): Promise<QTableInfo> {
    return request<QTableInfo>(this.base, "/v1/q");
  }

  cell(row: number, col: number): Promise<CellInfo> {
    return request<CellInfo>(this.base, `/v1/cell/${row}/${col}`);
  }

  health(): Promise<HealthInfo> {
    return request<HealthInfo>(this.base, "/v1/health");
  }
}
