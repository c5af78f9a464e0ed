/**
 * Single-page wiring: one project, four panels (paint, ranges, review,
 * results). All persistent state lives on the server; this file only moves
 * bytes between the API client, the session, and the canvas.
 */
import { ApiClient, ApiError, PredictionMapJson } from "./api.js";
import { ReviewBoard, entryKey } from "./board.js";
import { pollJob, runJob } from "./jobs.js";
import { Interval, checkIntervals } from "./ranges.js";
import { MaskRaster, Point } from "./raster.js";
import { UiSession } from "./session.js";
import { mapTooltip, renderConfusion, renderCvTable } from "./tables.js";
import { cellAt, classColor, visibleCells } from "./overlay.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function toast(text: string, isError = false): void {
  const bar = $("status");
  bar.textContent = text;
  bar.className = isError ? "status error" : "status";
}

class App {
  readonly api = new ApiClient("");
  readonly session = new UiSession();
  private classes: string[] = [];
  private imageEl: HTMLImageElement | null = null;
  private board: ReviewBoard | null = null;
  private boardPage = 0;
  private map: PredictionMapJson | null = null;
  private drawing: Point[] | null = null;

  async start(): Promise<void> {
    const info = await this.api.getProject();
    this.classes = info.classes.map((c) => c.name);
    const classSel = $<HTMLSelectElement>("class-select");
    classSel.innerHTML = "";
    for (const name of this.classes) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      classSel.appendChild(opt);
    }
    const imageSel = $<HTMLSelectElement>("image-select");
    imageSel.innerHTML = "";
    for (const id of info.images) {
      const opt = document.createElement("option");
      opt.value = id;
      opt.textContent = id;
      imageSel.appendChild(opt);
    }
    this.bind();
    if (info.images.length > 0) {
      await this.openImage(info.images[0]);
    }
    toast(`project loaded: ${info.images.length} images, ${this.classes.length} classes`);
  }

  private bind(): void {
    $<HTMLSelectElement>("image-select").onchange = (e) =>
      void this.openImage((e.target as HTMLSelectElement).value);
    $<HTMLSelectElement>("class-select").onchange = () => void this.loadMask();
    $<HTMLInputElement>("brush-radius").oninput = (e) => {
      this.session.brush.radius = Number((e.target as HTMLInputElement).value);
    };
    $<HTMLInputElement>("brush-erase").onchange = (e) => {
      this.session.brush.mode = (e.target as HTMLInputElement).checked ? "erase" : "paint";
    };
    $("undo").onclick = () => {
      this.session.undo();
      this.repaint();
    };
    $("commit").onclick = () => void this.commitMask();
    $("load-spectrum").onclick = () => void this.loadSpectrum();
    $("save-ranges").onclick = () => void this.saveRanges();
    $("run-select").onclick = () => void this.runSelect();
    $("board-approve-all").onclick = () => {
      this.board?.approveAll();
      this.renderBoard();
    };
    $("board-post").onclick = () => void this.postBoard();
    $("run-train").onclick = () => void this.runTrainCvPredict();

    const canvas = $<HTMLCanvasElement>("paint-canvas");
    canvas.onpointerdown = (e) => {
      this.drawing = [this.canvasPoint(e)];
    };
    canvas.onpointermove = (e) => {
      if (!this.drawing) {
        this.updateTooltip(e);
        return;
      }
      this.drawing.push(this.canvasPoint(e));
      this.previewStroke();
    };
    canvas.onpointerup = () => {
      if (this.drawing && this.session.loaded) {
        this.session.addStroke({
          kind: "brush",
          points: this.drawing,
          radius: this.session.brush.radius,
          mode: this.session.brush.mode,
        });
        this.repaint();
      }
      this.drawing = null;
    };
  }

  private canvasPoint(e: PointerEvent): Point {
    const rect = (e.target as HTMLCanvasElement).getBoundingClientRect();
    return { x: e.clientX - rect.left, y: e.clientY - rect.top };
  }

  private async openImage(imageId: string): Promise<void> {
    this.session.activeImage = imageId;
    const img = new Image();
    img.src = this.api.imageUrl(imageId);
    await img.decode();
    this.imageEl = img;
    const canvas = $<HTMLCanvasElement>("paint-canvas");
    canvas.width = img.naturalWidth;
    canvas.height = img.naturalHeight;
    await this.loadMask();
  }

  private async loadMask(): Promise<void> {
    if (!this.session.activeImage || !this.imageEl) return;
    const className = $<HTMLSelectElement>("class-select").value;
    this.session.activeClass = className || null;
    if (!className) return;
    const bytes = await this.api.getMaskPng(this.session.activeImage, className);
    const base = bytes
      ? MaskRaster.fromPngBytes(bytes)
      : new MaskRaster(this.imageEl.naturalWidth, this.imageEl.naturalHeight);
    this.session.loadMask(base);
    this.repaint();
  }

  private repaint(): void {
    if (!this.imageEl) return;
    const canvas = $<HTMLCanvasElement>("paint-canvas");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.drawImage(this.imageEl, 0, 0);
    if (this.session.toggles.mask && this.session.loaded) {
      const mask = this.session.current();
      const tint = ctx.createImageData(mask.width, mask.height);
      for (let i = 0; i < mask.data.length; i++) {
        if (mask.data[i]) {
          tint.data[i * 4] = 255;
          tint.data[i * 4 + 3] = Math.round(this.session.toggles.alpha * 255);
        }
      }
      void createImageBitmap(tint).then((bm) => ctx.drawImage(bm, 0, 0));
    }
    if (this.map && this.session.toggles.map) {
      for (const cell of visibleCells(this.map, this.session.toggles.hidden)) {
        ctx.fillStyle = classColor(this.map.class_list, cell.className);
        ctx.globalAlpha = this.session.toggles.alpha;
        ctx.fillRect(cell.col * this.map.size, cell.row * this.map.size, this.map.size, this.map.size);
        ctx.globalAlpha = 1;
      }
    }
  }

  private previewStroke(): void {
    // cheap live feedback: dots along the in-progress stroke
    const canvas = $<HTMLCanvasElement>("paint-canvas");
    const ctx = canvas.getContext("2d");
    if (!ctx || !this.drawing) return;
    ctx.fillStyle = this.session.brush.mode === "paint" ? "rgba(255,0,0,0.5)" : "rgba(0,0,255,0.5)";
    const last = this.drawing[this.drawing.length - 1];
    ctx.beginPath();
    ctx.arc(last.x, last.y, Math.max(1, this.session.brush.radius), 0, 2 * Math.PI);
    ctx.fill();
  }

  private updateTooltip(e: PointerEvent): void {
    if (!this.map) return;
    const p = this.canvasPoint(e);
    const cell = cellAt(this.map, p.x, p.y);
    $("map-tooltip").textContent = cell ? mapTooltip(this.map, cell.row, cell.col) : "";
  }

  private async commitMask(): Promise<void> {
    const { activeImage, activeClass } = this.session;
    if (!activeImage || !activeClass) return;
    try {
      await this.api.putMaskPng(activeImage, activeClass, this.session.commitPayload());
      this.session.markCommitted();
      toast(`mask for ${activeClass} committed`);
    } catch (err) {
      // surfaced, never silent: the stroke list stays intact for retry
      toast(`commit failed: ${(err as Error).message} (retry with Commit)`, true);
    }
  }

  private async loadSpectrum(): Promise<void> {
    const { activeImage, activeClass } = this.session;
    if (!activeImage || !activeClass) return;
    const spec = await this.api.getSpectrum(activeImage, activeClass, { mass: 0.95 });
    const chart = $<HTMLCanvasElement>("spectrum-canvas");
    const ctx = chart.getContext("2d");
    if (ctx) {
      ctx.clearRect(0, 0, chart.width, chart.height);
      const peak = Math.max(...spec.bins, 1e-9);
      ctx.fillStyle = "#3cb44b";
      spec.bins.forEach((v, hue) => {
        const h = (v / peak) * chart.height;
        ctx.fillRect(hue * (chart.width / 360), chart.height - h, chart.width / 360, h);
      });
    }
    $<HTMLInputElement>("ranges-input").value = JSON.stringify(spec.derived ?? []);
    toast(`spectrum over ${spec.pixel_count} pixels; derived ranges filled in`);
  }

  private async saveRanges(): Promise<void> {
    const { activeClass } = this.session;
    if (!activeClass) return;
    let intervals: Interval[];
    try {
      intervals = JSON.parse($<HTMLInputElement>("ranges-input").value);
    } catch {
      toast("ranges must be JSON like [[85,125]]", true);
      return;
    }
    const problem = checkIntervals(intervals);
    if (problem) {
      toast(problem, true); // blocked before any network call
      return;
    }
    await this.api.putHueRanges(activeClass, intervals);
    toast(`hue ranges for ${activeClass} saved`);
  }

  private async runSelect(): Promise<void> {
    const { activeImage, activeClass } = this.session;
    if (!activeImage || !activeClass) return;
    const size = Number($<HTMLInputElement>("tile-size").value);
    const sth = Number($<HTMLInputElement>("tile-sth").value);
    try {
      const result = await runJob(this.api, () =>
        this.api.postSelect({ image_id: activeImage, class: activeClass, size, sth }),
      );
      const text = await this.api.getManifestText(String(result.id));
      this.board = ReviewBoard.fromManifestJsonl(text);
      this.boardPage = 0;
      this.renderBoard();
      toast(`selected ${result.tiles} tiles for review`);
    } catch (err) {
      toast((err as Error).message, true);
    }
  }

  private renderBoard(): void {
    const host = $("board");
    host.innerHTML = "";
    if (!this.board || !this.imageEl) return;
    for (const entry of this.board.page(this.boardPage)) {
      const tile = document.createElement("canvas");
      tile.width = 48;
      tile.height = 48;
      tile.getContext("2d")?.drawImage(
        this.imageEl, entry.x, entry.y, entry.size, entry.size, 0, 0, 48, 48,
      );
      tile.className = `tile ${entry.review}`;
      tile.title = `${entryKey(entry)} ${entry.label ?? ""}`;
      tile.onclick = () => {
        const key = entryKey(entry);
        if (entry.review === "rejected") this.board?.approve(key);
        else this.board?.reject(key);
        this.renderBoard();
      };
      host.appendChild(tile);
    }
    $("board-info").textContent = this.board
      ? `page ${this.boardPage + 1}/${this.board.pageCount()}, ${this.board.entries.length} tiles`
      : "";
  }

  private async postBoard(): Promise<void> {
    if (!this.board) return;
    const info = await this.api.postManifest(this.board.toManifestJsonl());
    $("board-info").textContent = `manifest ${info.id} stored with ${info.tiles} tiles`;
  }

  private async runTrainCvPredict(): Promise<void> {
    const manifestId = $<HTMLInputElement>("manifest-id").value.trim();
    if (!manifestId || !this.session.activeImage) return;
    try {
      const embedded = await runJob(this.api, () => this.api.postEmbed(manifestId));
      const featuresId = String(embedded.id);
      const learners = $<HTMLInputElement>("learners").value.split(",").map((s) => s.trim());
      const cv = await runJob(this.api, () => this.api.postCv({ features_id: featuresId, learners }));
      $("cv-host").replaceChildren(renderCvTable(document, await this.api.getReportText(String(cv.id))));
      const confusions = (cv.confusions ?? {}) as Record<string, string>;
      const confusionHost = $("confusion-host");
      confusionHost.replaceChildren();
      for (const [learner, cid] of Object.entries(confusions)) {
        const caption = document.createElement("h4");
        caption.textContent = learner;
        confusionHost.appendChild(caption);
        confusionHost.appendChild(renderConfusion(document, await this.api.getConfusion(cid)));
      }
      const trained = await runJob(this.api, () =>
        this.api.postTrain({ features_id: featuresId, learner: learners[0] ?? "knn" }),
      );
      const predicted = await runJob(this.api, () =>
        this.api.postPredict({
          model_id: String(trained.id),
          image_id: this.session.activeImage as string,
          size: Number($<HTMLInputElement>("tile-size").value),
        }),
      );
      this.map = await this.api.getMap(String(predicted.id));
      this.session.toggles.map = true;
      this.renderClassToggles();
      this.repaint();
      toast("training round finished; map overlay is live");
    } catch (err) {
      toast((err as Error).message, true);
    }
  }

  private renderClassToggles(): void {
    const host = $("class-toggles");
    host.innerHTML = "";
    if (!this.map) return;
    for (const name of this.map.class_list) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = !this.session.toggles.hidden.has(name);
      box.onchange = () => {
        this.session.toggleClassVisibility(name);
        this.repaint();
      };
      label.appendChild(box);
      label.appendChild(document.createTextNode(name));
      host.appendChild(label);
    }
  }
}

declare global {
  interface Window {
    vegmapApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("paint-canvas")) {
  const app = new App();
  window.vegmapApp = app;
  app.start().catch((err) => {
    toast(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err), true);
  });
}

export { App, pollJob };
