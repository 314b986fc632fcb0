// Link table: rows arrive from the service already sorted by probability.
// Each row carries a likert selector; at most one feedback request per row is
// in flight (the button is disabled while pending), and a failed submit keeps
// the previous value with an inline error.

import { ApiClient, ApiError, LIKERT_OPTIONS, LinkRow, Likert } from "./api";

export class LinkTable {
  readonly element: HTMLTableElement;
  private body: HTMLTableSectionElement;
  onInspect?: (row: LinkRow) => void;

  constructor(
    private api: ApiClient,
    private reviewer: string = "reviewer",
  ) {
    this.element = document.createElement("table");
    this.element.className = "link-table";
    this.element.innerHTML =
      "<thead><tr><th>Source</th><th>Target</th><th>Probability</th>" +
      "<th>Band</th><th>Feedback</th><th>Review</th></tr></thead>";
    this.body = this.element.createTBody();
  }

  render(rows: LinkRow[]): void {
    this.body.replaceChildren();
    if (rows.length === 0) {
      const cell = this.body.insertRow().insertCell();
      cell.colSpan = 6;
      cell.className = "placeholder";
      cell.textContent = "no links";
      return;
    }
    for (const row of rows) {
      this.body.appendChild(this.buildRow(row));
    }
  }

  private buildRow(row: LinkRow): HTMLTableRowElement {
    const tr = document.createElement("tr");
    tr.dataset.source = row.source_id;
    tr.dataset.target = row.target_id;

    const source = tr.insertCell();
    source.textContent = row.source_id;
    source.className = "artifact-id";
    const target = tr.insertCell();
    target.textContent = row.target_id;
    target.className = "artifact-id";
    for (const cell of [source, target]) {
      cell.addEventListener("click", () => this.onInspect?.(this.rowData(tr)));
    }

    const probability = tr.insertCell();
    probability.className = "probability";
    const band = tr.insertCell();
    const feedback = tr.insertCell();
    feedback.className = "feedback-count";
    this.applyValues(tr, row);

    const review = tr.insertCell();
    review.className = "review";
    const select = document.createElement("select");
    for (const option of LIKERT_OPTIONS) {
      const el = document.createElement("option");
      el.value = option.value;
      el.textContent = option.label;
      select.appendChild(el);
    }
    select.value = "unsure";
    const button = document.createElement("button");
    button.textContent = "Submit";
    const error = document.createElement("span");
    error.className = "row-error";
    review.append(select, button, error);

    button.addEventListener("click", async () => {
      button.disabled = true;
      error.textContent = "";
      try {
        const updated = await this.api.submitFeedback(
          this.rowData(tr),
          select.value as Likert,
          this.reviewer,
        );
        this.applyValues(tr, updated);
      } catch (err) {
        error.textContent =
          err instanceof ApiError ? err.message : "submit failed";
      } finally {
        button.disabled = false;
      }
    });
    return tr;
  }

  private rowData(tr: HTMLTableRowElement): LinkRow {
    return {
      source_id: tr.dataset.source ?? "",
      target_id: tr.dataset.target ?? "",
      probability: Number(tr.cells[2].textContent),
      band: (tr.cells[3].firstElementChild?.textContent ?? "unsure") as LinkRow["band"],
      feedback_count: Number(tr.cells[4].textContent),
    };
  }

  private applyValues(tr: HTMLTableRowElement, row: Partial<LinkRow>): void {
    if (row.probability !== undefined) {
      tr.cells[2].textContent = row.probability.toFixed(3);
    }
    if (row.band) {
      const badge = document.createElement("span");
      badge.className = `badge band-${row.band}`;
      badge.textContent = row.band;
      tr.cells[3].replaceChildren(badge);
    }
    if (row.feedback_count !== undefined) {
      tr.cells[4].textContent = String(row.feedback_count);
    }
  }
}
