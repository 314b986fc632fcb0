// Application shell: filter controls bound to the URL, the link table or the
// unlinked-artifacts view, and a retry banner on network failure. No
// probability is ever computed here; the service is the single source of
// truth.

import { ApiClient, ApiError, Band, PairKind } from "./api";
import { Inspector } from "./inspector";
import { DEFAULT_STATE, FilterState, fromQuery, toQuery } from "./state";
import { LinkTable } from "./table";

const PAGE_SIZE = 50;

export class App {
  private state: FilterState = { ...DEFAULT_STATE };
  private table: LinkTable;
  private inspector: Inspector;
  private banner: HTMLElement;
  private viewHost: HTMLElement;
  private unlinkedHost: HTMLElement;
  private pageInfo: HTMLElement;

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {
    this.table = new LinkTable(api);
    this.inspector = new Inspector(api);
    this.banner = document.createElement("div");
    this.banner.className = "banner hidden";
    this.viewHost = document.createElement("main");
    this.unlinkedHost = document.createElement("ul");
    this.unlinkedHost.className = "unlinked-list";
    this.pageInfo = document.createElement("span");
    this.pageInfo.className = "page-info";
    this.table.onInspect = (row) =>
      void this.inspector.showPair(row.source_id, row.target_id);
  }

  async start(): Promise<void> {
    this.state = fromQuery(window.location.search);
    this.root.append(this.buildHeader(), this.banner, this.buildFilters(),
                     this.viewHost, this.inspector.element);
    window.addEventListener("popstate", () => {
      this.state = fromQuery(window.location.search);
      void this.refresh(false);
    });
    await this.refresh(false);
  }

  private buildHeader(): HTMLElement {
    const header = document.createElement("header");
    header.innerHTML = "<h1>Trace link review</h1>";
    const summary = document.createElement("span");
    summary.className = "run-summary";
    header.appendChild(summary);
    void this.api
      .fetchRun()
      .then((run) => {
        summary.textContent =
          `run ${run.run_id} · stage ${run.stage} · ${run.pairs} pairs · ` +
          `${run.bands.probably_linked} probably linked`;
      })
      .catch(() => {
        summary.textContent = "service unreachable";
      });
    return header;
  }

  private buildFilters(): HTMLElement {
    const bar = document.createElement("section");
    bar.className = "filters";

    const viewSelect = this.select(
      [
        ["links", "Trace links"],
        ["unlinked", "Not-linked artifacts"],
      ],
      this.state.view,
      (value) => {
        this.state.view = value as FilterState["view"];
        this.state.page = 1;
        void this.refresh();
      },
    );

    const typeSelect = this.select(
      [
        ["", "All types"],
        ["req_src", "Requirement ↔ Source"],
        ["req_test", "Requirement ↔ Test"],
        ["uc_src", "Use case ↔ Source"],
      ],
      this.state.type ?? "",
      (value) => {
        this.state.type = (value || undefined) as PairKind | undefined;
        this.state.page = 1;
        void this.refresh();
      },
    );

    const bandSelect = this.select(
      [
        ["", "All bands"],
        ["probably_linked", "Probably linked"],
        ["unsure", "Unsure"],
        ["probably_not_linked", "Probably not linked"],
      ],
      this.state.band ?? "",
      (value) => {
        this.state.band = (value || undefined) as Band | undefined;
        this.state.page = 1;
        void this.refresh();
      },
    );

    const prev = document.createElement("button");
    prev.textContent = "‹ prev";
    prev.addEventListener("click", () => {
      if (this.state.page > 1) {
        this.state.page -= 1;
        void this.refresh();
      }
    });
    const next = document.createElement("button");
    next.textContent = "next ›";
    next.addEventListener("click", () => {
      this.state.page += 1;
      void this.refresh();
    });

    bar.append(viewSelect, typeSelect, bandSelect, prev, this.pageInfo, next);
    return bar;
  }

  private select(
    options: [string, string][],
    value: string,
    onChange: (value: string) => void,
  ): HTMLSelectElement {
    const el = document.createElement("select");
    for (const [v, label] of options) {
      const option = document.createElement("option");
      option.value = v;
      option.textContent = label;
      el.appendChild(option);
    }
    el.value = value;
    el.addEventListener("change", () => onChange(el.value));
    return el;
  }

  private syncUrl(): void {
    const query = toQuery(this.state);
    const target = `${window.location.pathname}${query}`;
    if (target !== `${window.location.pathname}${window.location.search}`) {
      window.history.pushState(null, "", target);
    }
  }

  async refresh(push: boolean = true): Promise<void> {
    if (push) this.syncUrl();
    this.banner.classList.add("hidden");
    try {
      if (this.state.view === "unlinked") {
        await this.renderUnlinked();
      } else {
        await this.renderLinks();
      }
    } catch (err) {
      this.showRetryBanner(err);
    }
  }

  private async renderLinks(): Promise<void> {
    const page = await this.api.fetchLinks({
      type: this.state.type,
      band: this.state.band,
      page: this.state.page,
      pageSize: PAGE_SIZE,
    });
    this.table.render(page.links);
    this.viewHost.replaceChildren(this.table.element);
    const pages = Math.max(1, Math.ceil(page.total / PAGE_SIZE));
    this.pageInfo.textContent = `page ${page.page}/${pages} · ${page.total} links`;
  }

  private async renderUnlinked(): Promise<void> {
    const result = await this.api.fetchUnlinked();
    this.unlinkedHost.replaceChildren();
    if (result.artifacts.length === 0) {
      const li = document.createElement("li");
      li.className = "placeholder";
      li.textContent = "every artifact has at least one likely link";
      this.unlinkedHost.appendChild(li);
    }
    for (const id of result.artifacts) {
      const li = document.createElement("li");
      const link = document.createElement("a");
      link.textContent = id;
      link.href = "#";
      link.addEventListener("click", (event) => {
        event.preventDefault();
        void this.inspector.showSingle(id);
      });
      li.appendChild(link);
      this.unlinkedHost.appendChild(li);
    }
    this.viewHost.replaceChildren(this.unlinkedHost);
    this.pageInfo.textContent = `${result.artifacts.length} artifacts`;
  }

  private showRetryBanner(err: unknown): void {
    this.banner.classList.remove("hidden");
    const message =
      err instanceof ApiError ? err.message : "failed to reach the service";
    this.banner.replaceChildren();
    const text = document.createElement("span");
    text.textContent = `Could not load data: ${message} `;
    const retry = document.createElement("button");
    retry.textContent = "Retry";
    retry.addEventListener("click", () => void this.refresh(false));
    this.banner.append(text, retry);
  }
}

export function mount(): void {
  const root = document.getElementById("app");
  if (root) {
    void new App(new ApiClient(""), root).start();
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined"
    && document.getElementById("app")) {
  mount();
}
