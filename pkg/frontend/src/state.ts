// Filter state lives in the URL query string so any view is shareable and a
// reload restores it exactly.

import type { Band, PairKind } from "./api";

export interface FilterState {
  view: "links" | "unlinked";
  type?: PairKind;
  band?: Band;
  page: number;
}

const BANDS: Band[] = ["probably_linked", "unsure", "probably_not_linked"];
const KINDS: PairKind[] = ["req_src", "req_test", "uc_src"];

export const DEFAULT_STATE: FilterState = { view: "links", page: 1 };

export function toQuery(state: FilterState): string {
  const query = new URLSearchParams();
  if (state.view !== "links") query.set("view", state.view);
  if (state.type) query.set("type", state.type);
  if (state.band) query.set("band", state.band);
  if (state.page !== 1) query.set("page", String(state.page));
  const text = query.toString();
  return text ? `?${text}` : "";
}

export function fromQuery(search: string): FilterState {
  const query = new URLSearchParams(search.startsWith("?") ? search.slice(1) : search);
  const state: FilterState = { ...DEFAULT_STATE };
  if (query.get("view") === "unlinked") state.view = "unlinked";
  const type = query.get("type");
  if (type && (KINDS as string[]).includes(type)) state.type = type as PairKind;
  const band = query.get("band");
  if (band && (BANDS as string[]).includes(band)) state.band = band as Band;
  const page = Number(query.get("page"));
  if (Number.isInteger(page) && page >= 1) state.page = page;
  return state;
}
