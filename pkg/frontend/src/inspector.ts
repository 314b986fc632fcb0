// Side-by-side artifact text panes for reviewing a candidate pair.

import { ApiClient } from "./api";

export class Inspector {
  readonly element: HTMLElement;
  private left: HTMLElement;
  private right: HTMLElement;

  constructor(private api: ApiClient) {
    this.element = document.createElement("section");
    this.element.className = "inspector hidden";
    this.left = this.pane();
    this.right = this.pane();
    this.element.append(this.left, this.right);
  }

  private pane(): HTMLElement {
    const pane = document.createElement("article");
    pane.className = "pane";
    pane.innerHTML = "<h3></h3><pre></pre>";
    return pane;
  }

  private async fill(pane: HTMLElement, id: string): Promise<void> {
    pane.querySelector("h3")!.textContent = id;
    const pre = pane.querySelector("pre")!;
    pre.textContent = "loading…";
    try {
      const artifact = await this.api.fetchArtifact(id);
      pre.textContent = artifact.text;
    } catch {
      pre.textContent = "(failed to load artifact text)";
    }
  }

  async showPair(sourceId: string, targetId: string): Promise<void> {
    this.element.classList.remove("hidden");
    await Promise.all([this.fill(this.left, sourceId), this.fill(this.right, targetId)]);
  }

  async showSingle(id: string): Promise<void> {
    this.element.classList.remove("hidden");
    this.right.querySelector("h3")!.textContent = "";
    this.right.querySelector("pre")!.textContent = "";
    await this.fill(this.left, id);
  }
}
