/**
 * Session orchestration: image upload -> extracted graph -> direct graph
 * editing with a live compiled-prompt preview -> mock/remote edit run ->
 * before/after comparison -> continue editing from the edited state.
 *
 * The compile source is the last committed graph (the original extraction,
 * or the target of the most recent completed run); the working copy is the
 * target. All captions shown anywhere come verbatim from the service.
 */

import { ApiClient, ApiError, type CompileResult } from "./api.js";
import { CompareSlider } from "./compare.js";
import {
  GestureError,
  GraphViewModel,
  exportGraph,
  importGraph,
} from "./graph.js";
import { GraphView } from "./graphView.js";
import { pollRun } from "./poll.js";
import type { EditOpDoc, RunViewDoc, SceneGraphDoc } from "./types.js";

const MAX_UPLOAD_BYTES = 8 * 1024 * 1024;

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  readonly api: ApiClient;
  readonly root: HTMLElement;

  sourceDoc: SceneGraphDoc | null = null;
  vm: GraphViewModel | null = null;
  imageBase64: string | null = null;
  lastCompile: CompileResult | null = null;
  opsLog: EditOpDoc[] = [];
  pollIntervalMs = 1000;
  private previewInFlight: Promise<void> = Promise.resolve();

  private readonly doc: Document;
  private graphView!: GraphView;
  private compare!: CompareSlider;
  private banner!: HTMLElement;
  private preview!: Record<"src" | "tgt" | "tgt_new" | "tgt_bgd" | "meta", HTMLElement>;
  private panes!: Record<"editor" | "compare", HTMLElement>;
  private metrics!: HTMLElement;
  private runStatus!: HTMLElement;
  private relationList!: HTMLElement;
  private selectedLabel!: HTMLElement;
  private runsList!: HTMLElement;
  private relSelects: HTMLSelectElement[] = [];

  constructor(root: HTMLElement, api: ApiClient) {
    this.root = root;
    this.api = api;
    this.doc = root.ownerDocument;
    this.buildSkeleton();
  }

  // -- DOM ------------------------------------------------------------------

  private buildSkeleton(): void {
    const doc = this.doc;
    this.banner = el(doc, "div", { id: "banner", class: "banner hidden" });

    const upload = el(doc, "input", { id: "upload", type: "file", accept: "image/png" });
    upload.addEventListener("change", () => {
      const file = (upload as HTMLInputElement).files?.[0];
      if (file) void this.loadSessionFromFile(file);
    });
    const exportBtn = el(doc, "button", { id: "export-btn" }, "Export graph");
    exportBtn.addEventListener("click", () => this.downloadExport());
    const importBtn = el(doc, "button", { id: "import-btn" }, "Import graph");
    const importInput = el(doc, "input", { id: "import-input", type: "file", class: "hidden" });
    importBtn.addEventListener("click", () => importInput.click());
    importInput.addEventListener("change", () => {
      const file = (importInput as HTMLInputElement).files?.[0];
      if (file) void file.text().then((text) => this.importGraphText(text));
    });
    const header = el(doc, "header", {});
    header.append(el(doc, "h1", {}, "scene graph editor"), upload, exportBtn, importBtn, importInput);

    // editor pane: graph canvas + gesture controls + prompt preview
    this.graphView = new GraphView({ onSelect: (id) => this.onSelect(id) }, 640, 420, doc);
    this.selectedLabel = el(doc, "div", { id: "selected-node" }, "nothing selected");

    const renameInput = el(doc, "input", { id: "rename-input", placeholder: "new name" });
    const renameBtn = el(doc, "button", { id: "rename-btn" }, "Rename");
    renameBtn.addEventListener("click", () =>
      this.gesture((vm) => vm.renameNode(this.requireSelection(), (renameInput as HTMLInputElement).value)),
    );
    const attrsInput = el(doc, "input", { id: "attrs-input", placeholder: "comma-separated attributes" });
    const attrsBtn = el(doc, "button", { id: "attrs-btn" }, "Set attributes");
    attrsBtn.addEventListener("click", () =>
      this.gesture((vm) =>
        vm.setAttributes(this.requireSelection(), (attrsInput as HTMLInputElement).value.split(",")),
      ),
    );
    const deleteNodeBtn = el(doc, "button", { id: "delete-node-btn" }, "Delete node");
    deleteNodeBtn.addEventListener("click", () =>
      this.gesture((vm) => vm.deleteNode(this.requireSelection())),
    );
    const addNodeInput = el(doc, "input", { id: "add-node-input", placeholder: "node name" });
    const addNodeBtn = el(doc, "button", { id: "add-node-btn" }, "Add node");
    addNodeBtn.addEventListener("click", () => {
      this.gesture((vm) => void vm.addNode((addNodeInput as HTMLInputElement).value));
    });

    const relSubject = el(doc, "select", { id: "rel-subject" });
    const relPredicate = el(doc, "input", { id: "rel-predicate", placeholder: "predicate" });
    const relObject = el(doc, "select", { id: "rel-object" });
    this.relSelects = [relSubject as HTMLSelectElement, relObject as HTMLSelectElement];
    const relAddBtn = el(doc, "button", { id: "rel-add-btn" }, "Add relation");
    relAddBtn.addEventListener("click", () =>
      this.gesture((vm) =>
        vm.addRelation(
          (relSubject as HTMLSelectElement).value,
          (relPredicate as HTMLInputElement).value,
          (relObject as HTMLSelectElement).value,
        ),
      ),
    );
    this.relationList = el(doc, "ul", { id: "relation-list" });

    const controls = el(doc, "div", { class: "controls" });
    controls.append(
      this.selectedLabel,
      renameInput, renameBtn,
      attrsInput, attrsBtn,
      deleteNodeBtn,
      addNodeInput, addNodeBtn,
      relSubject, relPredicate, relObject, relAddBtn,
      this.relationList,
    );

    this.preview = {
      src: el(doc, "code", { id: "preview-src" }),
      tgt: el(doc, "code", { id: "preview-tgt" }),
      tgt_new: el(doc, "code", { id: "preview-tgt-new" }),
      tgt_bgd: el(doc, "code", { id: "preview-tgt-bgd" }),
      meta: el(doc, "div", { id: "preview-meta" }),
    };
    const previewPane = el(doc, "div", { id: "preview", class: "preview" });
    previewPane.append(
      el(doc, "h2", {}, "compiled prompts"),
      el(doc, "span", { class: "label" }, "target (new): "), this.preview.tgt_new, el(doc, "br"),
      el(doc, "span", { class: "label" }, "target (background): "), this.preview.tgt_bgd, el(doc, "br"),
      el(doc, "span", { class: "label" }, "target: "), this.preview.tgt, el(doc, "br"),
      el(doc, "span", { class: "label" }, "source: "), this.preview.src, el(doc, "br"),
      this.preview.meta,
    );

    const runBtn = el(doc, "button", { id: "run-btn" }, "Run edit");
    runBtn.addEventListener("click", () => void this.runAndCompare());
    this.runStatus = el(doc, "span", { id: "run-status" });

    const editorPane = el(doc, "section", { id: "editor-pane" });
    editorPane.append(this.graphView.svg as unknown as Node, controls, previewPane, runBtn, this.runStatus);

    // compare pane
    this.compare = new CompareSlider(doc);
    this.metrics = el(doc, "div", { id: "metrics" });
    const backBtn = el(doc, "button", { id: "show-editor" }, "Back to editor");
    backBtn.addEventListener("click", () => this.showPane("editor"));
    const comparePane = el(doc, "section", { id: "compare-pane", class: "hidden" });
    comparePane.append(el(doc, "h2", {}, "before / after"), this.compare.root, this.metrics, backBtn);

    this.runsList = el(doc, "ul", { id: "runs-list" });
    this.panes = { editor: editorPane, compare: comparePane };
    this.root.append(this.banner, header, editorPane, comparePane, this.runsList);
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  private clearBanner(): void {
    this.banner.textContent = "";
    this.banner.classList.add("hidden");
  }

  /** Pane toggling only shows/hides; the working graph is untouched. */
  showPane(name: "editor" | "compare"): void {
    for (const [paneName, pane] of Object.entries(this.panes)) {
      pane.classList.toggle("hidden", paneName !== name);
    }
  }

  private onSelect(nodeId: string | null): void {
    if (!this.vm) return;
    this.selectedLabel.textContent = nodeId
      ? `selected: ${this.vm.node(nodeId).name} (${nodeId})`
      : "nothing selected";
  }

  private requireSelection(): string {
    if (!this.vm?.selectedNodeId) throw new GestureError("select a node first");
    return this.vm.selectedNodeId;
  }

  // -- session --------------------------------------------------------------

  async loadSessionFromFile(file: File): Promise<void> {
    if (file.size > MAX_UPLOAD_BYTES) {
      this.showBanner(`image is ${file.size} bytes; the limit is ${MAX_UPLOAD_BYTES}`);
      return;
    }
    const buffer = await file.arrayBuffer();
    let binary = "";
    for (const byte of new Uint8Array(buffer)) binary += String.fromCharCode(byte);
    await this.loadSession(btoa(binary));
  }

  async loadSession(imageBase64: string): Promise<void> {
    this.clearBanner();
    this.imageBase64 = imageBase64;
    try {
      const doc = await this.api.extract(imageBase64);
      this.sourceDoc = doc;
      this.vm = GraphViewModel.fromDoc(doc);
      this.opsLog = [];
      this.renderGraph();
      await this.refreshPreview();
      this.showPane("editor");
    } catch (err) {
      this.showBanner(`extraction failed: ${(err as Error).message} — fix the service or retry`);
    }
  }

  importGraphText(text: string): void {
    try {
      const vm = importGraph(text);
      this.sourceDoc = vm.toDoc();
      this.vm = vm;
      this.opsLog = [];
      this.renderGraph();
      this.previewInFlight = this.refreshPreview();
    } catch (err) {
      this.showBanner(`import failed: ${(err as Error).message}`);
    }
  }

  /** Await any in-flight preview refresh (tests and scripted drivers). */
  async settle(): Promise<void> {
    await this.previewInFlight;
  }

  exportGraphText(): string {
    if (!this.vm) throw new GestureError("no session loaded");
    return exportGraph(this.vm);
  }

  private downloadExport(): void {
    try {
      const text = this.exportGraphText();
      const link = el(this.doc, "a", {
        href: `data:application/json;charset=utf-8,${encodeURIComponent(text)}`,
        download: "scene-graph.json",
      });
      link.click();
    } catch (err) {
      this.showBanner((err as Error).message);
    }
  }

  // -- gestures + preview -----------------------------------------------------

  private gesture(apply: (vm: GraphViewModel) => EditOpDoc | void): void {
    if (!this.vm) {
      this.showBanner("load an image first");
      return;
    }
    try {
      const op = apply(this.vm);
      if (op) this.opsLog.push(op); // adding a bare node has no standalone op
      this.clearBanner();
      this.renderGraph();
      this.previewInFlight = this.refreshPreview();
    } catch (err) {
      if (err instanceof GestureError) this.showBanner(err.message);
      else throw err;
    }
  }

  private renderGraph(): void {
    if (!this.vm) return;
    this.graphView.render(this.vm);
    this.onSelect(this.vm.selectedNodeId);

    for (const select of this.relSelects) {
      select.replaceChildren(
        ...this.vm.nodes.map((n) => el(this.doc, "option", { value: n.id }, `${n.name} (${n.id})`)),
      );
    }
    this.relationList.replaceChildren(
      ...this.vm.relations.map((r, index) => {
        const item = el(
          this.doc,
          "li",
          {},
          `${this.vm!.node(r.subjectId).name} -[${r.predicate}]-> ${this.vm!.node(r.objectId).name} `,
        );
        const remove = el(this.doc, "button", { class: "rel-delete", "data-index": String(index) }, "x");
        remove.addEventListener("click", () => this.gesture((vm) => vm.deleteRelation(index)));
        item.append(remove);
        return item;
      }),
    );
  }

  /** Preview is a verbatim rendering of the service's compile response. */
  async refreshPreview(): Promise<void> {
    if (!this.vm || !this.sourceDoc) return;
    try {
      const result = await this.api.compile(this.sourceDoc, this.vm.toDoc());
      this.lastCompile = result;
      this.preview.src.textContent = result.bundle.src;
      this.preview.tgt.textContent = result.bundle.tgt;
      this.preview.tgt_new.textContent = result.bundle.tgt_new;
      this.preview.tgt_bgd.textContent = result.bundle.tgt_bgd;
      const dropped = result.bundle.truncated.length;
      this.preview.meta.textContent =
        `tokens: tgt ${result.bundle.token_counts.tgt ?? "?"}, src ${result.bundle.token_counts.src ?? "?"}` +
        (dropped ? `; ${dropped} relation(s) truncated` : "");
    } catch (err) {
      this.showBanner(`preview failed: ${(err as Error).message}`);
    }
  }

  // -- run + compare ----------------------------------------------------------

  async runAndCompare(): Promise<RunViewDoc | null> {
    if (!this.vm || !this.sourceDoc || !this.imageBase64) {
      this.showBanner("load an image first");
      return null;
    }
    const target = this.vm.toDoc();
    this.runStatus.textContent = "submitting";
    try {
      const { run_id } = await this.api.submitEdit({
        image: this.imageBase64,
        source_graph: this.sourceDoc,
        target_graph: target,
        params: {},
      });
      const view = await pollRun(this.api, run_id, {
        intervalMs: this.pollIntervalMs,
        onUpdate: (update) => {
          this.runStatus.textContent = update.status;
        },
      });
      await this.refreshRunsList();
      if (view.status === "failed") {
        const reason = view.manifest?.error?.message ?? "unknown failure";
        this.showBanner(`run ${run_id} failed: ${reason}`);
        return view;
      }

      this.compare.setImages(
        this.api.runImageUrl(run_id, "input"),
        this.api.runImageUrl(run_id, "output"),
      );
      const metrics = view.manifest?.metrics;
      this.metrics.textContent = metrics
        ? `PSNR: ${metrics.psnr_db ?? "n/a"} dB   SSIM: ${metrics.ssim ?? "n/a"}`
        : "no metrics recorded";
      this.showPane("compare");

      // feedback loop: the edit just applied becomes the next source
      this.sourceDoc = target;
      this.vm.dirty = false;
      this.previewInFlight = this.refreshPreview();
      return view;
    } catch (err) {
      if (err instanceof ApiError || err instanceof Error) {
        this.showBanner(`run failed: ${err.message}`);
        this.runStatus.textContent = "failed";
        return null;
      }
      throw err;
    }
  }

  private async refreshRunsList(): Promise<void> {
    try {
      const { runs } = await this.api.listRuns();
      this.runsList.replaceChildren(
        ...runs.map((run) => el(this.doc, "li", {}, `${run.run_id}: ${run.status}`)),
      );
    } catch {
      /* the runs list is decorative; never break the flow over it */
    }
  }
}
