// Typed client for the review service JSON API. The UI never computes
// probabilities itself; everything displayed comes from these responses.

export type Band = "probably_linked" | "unsure" | "probably_not_linked";

export type PairKind = "req_src" | "req_test" | "uc_src";

export type Likert =
  | "strongly_agree"
  | "agree"
  | "unsure"
  | "disagree"
  | "strongly_disagree";

export const LIKERT_OPTIONS: { value: Likert; label: string }[] = [
  { value: "strongly_agree", label: "Strongly agree" },
  { value: "agree", label: "Agree" },
  { value: "unsure", label: "Unsure" },
  { value: "disagree", label: "Disagree" },
  { value: "strongly_disagree", label: "Strongly disagree" },
];

export interface LinkRow {
  source_id: string;
  target_id: string;
  probability: number;
  band: Band;
  feedback_count: number;
}

export interface LinksPage {
  total: number;
  page: number;
  page_size: number;
  links: LinkRow[];
}

export interface ArtifactText {
  id: string;
  kind: string;
  text: string;
}

export interface RunSummary {
  run_id: string;
  stage: number;
  pair_kind: PairKind;
  pairs: number;
  bands: Record<Band, number>;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, "network", `cannot reach the service (${err})`);
  }
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    throw new ApiError(
      response.status,
      (body as { code?: string }).code ?? "error",
      (body as { message?: string }).message ?? response.statusText,
    );
  }
  return body as T;
}

export class ApiClient {
  constructor(private base: string = "") {}

  fetchLinks(params: {
    type?: PairKind;
    band?: Band;
    page?: number;
    pageSize?: number;
  }): Promise<LinksPage> {
    const query = new URLSearchParams();
    if (params.type) query.set("type", params.type);
    if (params.band) query.set("band", params.band);
    query.set("page", String(params.page ?? 1));
    query.set("page_size", String(params.pageSize ?? 50));
    return request<LinksPage>(`${this.base}/api/links?${query}`);
  }

  submitFeedback(
    row: Pick<LinkRow, "source_id" | "target_id">,
    likert: Likert,
    reviewer: string,
  ): Promise<LinkRow> {
    return request<LinkRow>(`${this.base}/api/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        source_id: row.source_id,
        target_id: row.target_id,
        likert,
        reviewer,
      }),
    });
  }

  fetchUnlinked(threshold?: number): Promise<{ artifacts: string[] }> {
    const query = threshold === undefined ? "" : `?threshold=${threshold}`;
    return request(`${this.base}/api/artifacts/unlinked${query}`);
  }

  fetchArtifact(id: string): Promise<ArtifactText> {
    return request(`${this.base}/api/artifacts/${encodeURIComponent(id)}`);
  }

  fetchRun(): Promise<RunSummary> {
    return request(`${this.base}/api/run`);
  }
}
