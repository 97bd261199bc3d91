import { ApiClient, ApiError } from './api/client';
import type {
  CellDoc,
  ElectrodeKind,
  Progress,
  ShadingDoc,
  StreamlinesDoc,
} from './api/types';
import { add, normalize, scale, type Vec3 } from './math/vec3';
import { buildHeatmap } from './render/heatmap';
import { buildSegments } from './render/lines';
import { rgbToCss } from './render/shading';
import { OrbitCamera, trackballRegion, twistDelta, type Viewport } from './view/camera';
import { clampBox, electrodeSphere, pickElectrode } from './view/editor';
import { SimulationController } from './view/simulation';
import { ViewState, type InteractionMode, type SegmentationMode } from './view/viewstate';

const KIND_COLORS: Record<ElectrodeKind, string> = {
  anode: '#d08a4a',
  cathode: '#5a9bd8',
  bipolar: '#9a7fd0',
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function axisIndex(axis: 'x' | 'y' | 'z'): 0 | 1 | 2 {
  return axis === 'x' ? 0 : axis === 'y' ? 1 : 2;
}

export class App {
  private readonly api: ApiClient;
  private readonly camera = new OrbitCamera();
  private readonly view = new ViewState();
  private readonly sim: SimulationController;

  private cell: CellDoc | null = null;
  private shading: ShadingDoc | null = null;
  private streamlines: StreamlinesDoc | null = null;

  private readonly canvas = el<HTMLCanvasElement>('view');
  private drag: { x: number; y: number; region: 'inside' | 'border' } | null = null;

  constructor(baseUrl = '') {
    this.api = new ApiClient(baseUrl);
    this.sim = new SimulationController(this.api, {
      onProgress: (p) => this.showProgress(p),
      onResults: () => void this.refreshResults(),
    });
    this.bindControls();
    this.bindPointer();
    new ResizeObserver(() => this.draw()).observe(this.canvas);
  }

  async start(): Promise<void> {
    await this.reloadCell();
    this.shading = await this.api.shading();
    const f = this.shading.autofocus;
    this.camera.focusOn(f.focus, f.distance * Math.sin(this.camera.fov / 2));
    this.camera.azimuth = Math.PI / 6;
    this.camera.elevation = Math.PI / 8;
    this.showProgress(await this.api.status());
    await this.refreshResults();
    this.draw();
  }

  // -- server state ---------------------------------------------------------

  private async reloadCell(): Promise<void> {
    this.cell = await this.api.getCell();
    this.renderElectrodeList();
    this.loadElectrodeForm();
    const grid = this.cell.grid;
    const axis = el<HTMLSelectElement>('slice-axis').value as 'x' | 'y' | 'z';
    const slider = el<HTMLInputElement>('slice-index');
    slider.max = String([grid.nx, grid.ny, grid.nz][axisIndex(axis)] - 1);
    this.draw();
  }

  private async refreshResults(): Promise<void> {
    try {
      this.streamlines = await this.api.streamlines();
      el('result-error').textContent = '';
    } catch (err) {
      this.streamlines = null;
      if (!(err instanceof ApiError && err.status === 422)) throw err;
    }
    await Promise.all([this.refreshSlice(), this.refreshDeposit()]);
    this.draw();
  }

  private showProgress(p: Progress): void {
    const line = el('status-line');
    const delta = p.last_max_delta === null ? '–' : p.last_max_delta.toExponential(2);
    line.textContent = `${p.status} · ${p.iterations} iterations · Δmax ${delta}`;
    line.classList.toggle('diverged', p.status === 'diverged');
    el<HTMLButtonElement>('btn-step').disabled = p.status === 'running';
    el<HTMLButtonElement>('btn-run').disabled = p.status === 'running';
  }

  // -- geometry editing -----------------------------------------------------

  private renderElectrodeList(): void {
    const list = el('electrode-list');
    list.textContent = '';
    this.cell?.electrodes.forEach((e, id) => {
      const row = document.createElement('div');
      row.textContent = `#${id} ${e.kind} @ [${e.box.join(', ')}]`;
      row.style.color = KIND_COLORS[e.kind];
      row.classList.toggle('selected', this.view.selectedElectrode === id);
      row.onclick = () => {
        this.view.selectElectrode(id);
        this.renderElectrodeList();
        this.loadElectrodeForm();
        this.draw();
      };
      list.appendChild(row);
    });
  }

  private loadElectrodeForm(): void {
    const id = this.view.selectedElectrode;
    const e = id === null ? undefined : this.cell?.electrodes[id];
    const fields = ['box-i1', 'box-i2', 'box-j1', 'box-j2', 'box-k1', 'box-k2'];
    fields.forEach((f, i) => {
      el<HTMLInputElement>(f).value = e ? String(e.box[i]) : '';
    });
    el<HTMLInputElement>('vm').value = e ? String(e.metal_potential) : '';
    el<HTMLInputElement>('pol-er').value = e ? String(e.polarization.e_r) : '';
    el<HTMLInputElement>('pol-ka').value = e ? String(e.polarization.k_a) : '';
    el<HTMLInputElement>('pol-kc').value = e ? String(e.polarization.k_c) : '';
  }

  private async applyElectrode(): Promise<void> {
    const id = this.view.selectedElectrode;
    if (id === null || !this.cell) return;
    const raw = ['box-i1', 'box-i2', 'box-j1', 'box-j2', 'box-k1', 'box-k2'].map(
      (f) => Number(el<HTMLInputElement>(f).value),
    );
    const box = clampBox(raw as never, this.cell.grid);
    await this.edit(() =>
      this.api.patchElectrode(id, {
        box,
        metal_potential: Number(el<HTMLInputElement>('vm').value),
        polarization: {
          e_r: Number(el<HTMLInputElement>('pol-er').value),
          k_a: Number(el<HTMLInputElement>('pol-ka').value),
          k_c: Number(el<HTMLInputElement>('pol-kc').value),
        },
      }),
    );
  }

  private async addElectrode(): Promise<void> {
    if (!this.cell) return;
    const kind = el<HTMLSelectElement>('new-kind').value as ElectrodeKind;
    const grid = this.cell.grid;
    const box = clampBox(
      [
        Math.floor(grid.nx / 2) - 1,
        Math.floor(grid.nx / 2) + 1,
        2,
        grid.ny - 3,
        2,
        grid.nz - 3,
      ],
      grid,
    );
    await this.edit(async () => {
      const { id } = await this.api.addElectrode({
        kind,
        box,
        metal_potential: kind === 'anode' ? 1 : 0,
        polarization: { e_r: 0, k_a: 0, k_c: 0 },
      });
      this.view.selectElectrode(id);
    });
  }

  private async deleteElectrode(): Promise<void> {
    const id = this.view.selectedElectrode;
    if (id === null) return;
    await this.edit(async () => {
      await this.api.deleteElectrode(id);
      this.view.onElectrodeDeleted(id);
    });
  }

  private async edit(mutation: () => Promise<unknown>): Promise<void> {
    try {
      await mutation();
      el('edit-error').textContent = '';
      this.streamlines = null;
      await this.reloadCell();
      this.showProgress(await this.api.status());
      await this.refreshResults();
    } catch (err) {
      el('edit-error').textContent = err instanceof Error ? err.message : String(err);
    }
  }

  // -- analysis tools -------------------------------------------------------

  private async refreshSlice(): Promise<void> {
    const axis = el<HTMLSelectElement>('slice-axis').value as 'x' | 'y' | 'z';
    const index = Number(el<HTMLInputElement>('slice-index').value);
    const quantity = el<HTMLSelectElement>('slice-quantity').value as 'V' | 'Jmag';
    const canvas = el<HTMLCanvasElement>('slice-canvas');
    try {
      const doc = await this.api.slice(axis, index, quantity);
      this.paintMap(canvas, doc.values, doc.dims);
    } catch (err) {
      if (err instanceof ApiError && (err.status === 422 || err.status === 400)) {
        canvas.getContext('2d')?.clearRect(0, 0, canvas.width, canvas.height);
        return;
      }
      throw err;
    }
  }

  private async refreshDeposit(): Promise<void> {
    const host = el('deposit-faces');
    host.textContent = '';
    const id = this.view.selectedElectrode;
    if (id === null) return;
    try {
      const doc = await this.api.deposit(id);
      for (const [name, face] of Object.entries(doc.faces)) {
        const label = document.createElement('label');
        label.textContent = `${name} [${face.min.toExponential(2)}, ${face.max.toExponential(2)}] A/m²`;
        const canvas = document.createElement('canvas');
        canvas.className = 'map';
        host.append(label, canvas);
        // Per-face scaling so each face uses the whole colormap.
        this.paintMap(canvas, face.values, face.dims, { min: face.min, max: face.max });
      }
    } catch (err) {
      if (!(err instanceof ApiError && err.status === 422)) throw err;
    }
  }

  private paintMap(
    canvas: HTMLCanvasElement,
    values: number[],
    dims: [number, number],
    scaling?: { min: number; max: number },
  ): void {
    const controls = this.shading?.colormaps[this.view.colormap]?.controls;
    if (!controls) return;
    const [rows, cols] = dims;
    canvas.width = cols;
    canvas.height = rows;
    const ctx = canvas.getContext('2d');
    if (!ctx) return;
    for (const cell of buildHeatmap(values, dims, controls, scaling)) {
      ctx.fillStyle = rgbToCss(cell.color);
      ctx.fillRect(cell.col, rows - 1 - cell.row, 1, 1);
    }
  }

  private async probe(x: number, y: number, z: number): Promise<void> {
    try {
      const doc = await this.api.probe(x, y, z);
      el('probe-out').textContent =
        `V  = ${doc.potential.toPrecision(6)} V\n` +
        `J  = (${doc.current.map((c) => c.toPrecision(4)).join(', ')})\n` +
        `|J| = ${doc.current_magnitude.toPrecision(6)} A/m²`;
      el('result-error').textContent = '';
    } catch (err) {
      el('result-error').textContent = err instanceof Error ? err.message : String(err);
    }
  }

  // -- 3D view --------------------------------------------------------------

  private viewport(): Viewport {
    return { width: this.canvas.clientWidth, height: this.canvas.clientHeight };
  }

  draw(): void {
    const vp = this.viewport();
    if (vp.width === 0 || vp.height === 0 || !this.cell) return;
    this.canvas.width = vp.width;
    this.canvas.height = vp.height;
    const ctx = this.canvas.getContext('2d');
    if (!ctx) return;
    ctx.clearRect(0, 0, vp.width, vp.height);

    const grid = this.cell.grid;
    this.strokeBox(
      ctx,
      [0, 0, 0],
      [(grid.nx - 1) * grid.h, (grid.ny - 1) * grid.h, (grid.nz - 1) * grid.h],
      '#39414d',
      1,
      vp,
    );

    this.cell.electrodes.forEach((e, id) => {
      if (!this.view.groupVisible(this.view.electrodeSegmentation, id)) return;
      const lo: Vec3 = [e.box[0] * grid.h, e.box[2] * grid.h, e.box[4] * grid.h];
      const hi: Vec3 = [e.box[1] * grid.h, e.box[3] * grid.h, e.box[5] * grid.h];
      const selected = this.view.selectedElectrode === id;
      this.strokeBox(ctx, lo, hi, KIND_COLORS[e.kind], selected ? 2.5 : 1.2, vp);
    });

    if (this.streamlines && this.shading) {
      const segments = buildSegments(this.streamlines, this.shading, this.camera, vp, this.view);
      ctx.lineWidth = 1.5;
      for (const s of segments) {
        ctx.strokeStyle = rgbToCss(s.color);
        ctx.beginPath();
        ctx.moveTo(s.x0, s.y0);
        ctx.lineTo(s.x1, s.y1);
        ctx.stroke();
      }
    }
  }

  private strokeBox(
    ctx: CanvasRenderingContext2D,
    lo: Vec3,
    hi: Vec3,
    color: string,
    width: number,
    vp: Viewport,
  ): void {
    const c = [lo, hi];
    const edges: [Vec3, Vec3][] = [];
    for (let a = 0; a < 2; a++) {
      for (let b = 0; b < 2; b++) {
        edges.push([
          [c[0][0], c[a][1], c[b][2]],
          [c[1][0], c[a][1], c[b][2]],
        ]);
        edges.push([
          [c[a][0], c[0][1], c[b][2]],
          [c[a][0], c[1][1], c[b][2]],
        ]);
        edges.push([
          [c[a][0], c[b][1], c[0][2]],
          [c[a][0], c[b][1], c[1][2]],
        ]);
      }
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    for (const [p, q] of edges) {
      const a = this.camera.project(p, vp);
      const b = this.camera.project(q, vp);
      if (!a || !b) continue;
      ctx.beginPath();
      ctx.moveTo(a.x, a.y);
      ctx.lineTo(b.x, b.y);
      ctx.stroke();
    }
  }

  /** Intersect the pointer ray with the current slice plane and probe there. */
  private async probeAtPointer(px: number, py: number): Promise<void> {
    if (!this.cell) return;
    const vp = this.viewport();
    const { forward, right, up } = this.camera.basis();
    const focal = vp.height / 2 / Math.tan(this.camera.fov / 2);
    const dir = normalize(
      add(
        add(forward, scale(right, (px - vp.width / 2) / focal)),
        scale(up, (vp.height / 2 - py) / focal),
      ),
    );
    const axis = axisIndex(el<HTMLSelectElement>('slice-axis').value as 'x' | 'y' | 'z');
    const plane = Number(el<HTMLInputElement>('slice-index').value) * this.cell.grid.h;
    const origin = this.camera.position();
    if (Math.abs(dir[axis]) < 1e-9) return;
    const t = (plane - origin[axis]) / dir[axis];
    if (t <= 0) return;
    const hit = add(origin, scale(dir, t));
    el<HTMLInputElement>('probe-x').value = hit[0].toFixed(4);
    el<HTMLInputElement>('probe-y').value = hit[1].toFixed(4);
    el<HTMLInputElement>('probe-z').value = hit[2].toFixed(4);
    await this.probe(hit[0], hit[1], hit[2]);
  }

  // -- wiring ---------------------------------------------------------------

  private bindControls(): void {
    el<HTMLButtonElement>('btn-step').onclick = () => void this.sim.step();
    el<HTMLButtonElement>('btn-run').onclick = () => void this.sim.run();
    el<HTMLButtonElement>('btn-cancel').onclick = () => void this.sim.cancel();

    el<HTMLButtonElement>('add-electrode').onclick = () => void this.addElectrode();
    el<HTMLButtonElement>('delete-electrode').onclick = () => void this.deleteElectrode();
    el<HTMLButtonElement>('apply-electrode').onclick = () => void this.applyElectrode();

    el<HTMLSelectElement>('mode').onchange = (ev) => {
      const mode = (ev.target as HTMLSelectElement).value as InteractionMode;
      this.view.setMode(mode);
      this.canvas.className = `mode-${mode}`;
    };

    el<HTMLSelectElement>('line-quantity').onchange = (ev) => {
      this.view.lineQuantity = (ev.target as HTMLSelectElement).value as 'V' | 'Jmag';
      this.draw();
    };
    el<HTMLSelectElement>('colormap').onchange = (ev) => {
      this.view.colormap = (ev.target as HTMLSelectElement).value;
      this.draw();
      void this.refreshSlice();
      void this.refreshDeposit();
    };
    const applyScaling = () => {
      const min = el<HTMLInputElement>('scale-min').value;
      const max = el<HTMLInputElement>('scale-max').value;
      try {
        this.view.setScaling(
          min === '' || max === '' ? null : { min: Number(min), max: Number(max) },
        );
        el('result-error').textContent = '';
      } catch (err) {
        el('result-error').textContent = err instanceof Error ? err.message : String(err);
      }
      this.draw();
    };
    el<HTMLInputElement>('scale-min').onchange = applyScaling;
    el<HTMLInputElement>('scale-max').onchange = applyScaling;

    el<HTMLSelectElement>('seg-lines').onchange = (ev) => {
      this.view.lineSegmentation = (ev.target as HTMLSelectElement).value as SegmentationMode;
      this.draw();
    };
    el<HTMLSelectElement>('seg-electrodes').onchange = (ev) => {
      this.view.electrodeSegmentation = (ev.target as HTMLSelectElement)
        .value as SegmentationMode;
      this.draw();
    };

    el<HTMLButtonElement>('btn-autofocus').onclick = () => {
      if (!this.cell) return;
      const id = this.view.selectedElectrode;
      if (id !== null) {
        const { center, radius } = electrodeSphere(
          this.cell.electrodes[id].box,
          this.cell.grid.h,
        );
        this.camera.focusOn(center, radius);
      } else if (this.shading) {
        const f = this.shading.autofocus;
        this.camera.focusOn(f.focus, f.distance * Math.sin(this.camera.fov / 2));
      }
      this.draw();
    };
    el<HTMLButtonElement>('btn-flip').onclick = () => {
      this.camera.flip();
      this.draw();
    };

    el<HTMLSelectElement>('slice-axis').onchange = () => {
      if (this.cell) {
        const axis = el<HTMLSelectElement>('slice-axis').value as 'x' | 'y' | 'z';
        const n = [this.cell.grid.nx, this.cell.grid.ny, this.cell.grid.nz][axisIndex(axis)];
        const slider = el<HTMLInputElement>('slice-index');
        slider.max = String(n - 1);
        if (Number(slider.value) > n - 1) slider.value = String(n - 1);
      }
      void this.refreshSlice();
    };
    el<HTMLInputElement>('slice-index').oninput = () => void this.refreshSlice();
    el<HTMLSelectElement>('slice-quantity').onchange = () => void this.refreshSlice();

    el<HTMLButtonElement>('btn-probe').onclick = () =>
      void this.probe(
        Number(el<HTMLInputElement>('probe-x').value),
        Number(el<HTMLInputElement>('probe-y').value),
        Number(el<HTMLInputElement>('probe-z').value),
      );
  }

  populateColormaps(): void {
    const select = el<HTMLSelectElement>('colormap');
    select.textContent = '';
    for (const name of Object.keys(this.shading?.colormaps ?? {})) {
      const option = document.createElement('option');
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
    select.value = this.view.colormap;
  }

  private bindPointer(): void {
    this.canvas.onpointerdown = (ev) => {
      this.canvas.setPointerCapture(ev.pointerId);
      const vp = this.viewport();
      if (this.view.mode === 'select') {
        if (this.cell) {
          const hit = pickElectrode(
            this.cell.electrodes,
            this.cell.grid,
            this.camera,
            vp,
            ev.offsetX,
            ev.offsetY,
          );
          this.view.selectElectrode(hit);
          this.renderElectrodeList();
          this.loadElectrodeForm();
          void this.refreshDeposit();
          this.draw();
        }
        return;
      }
      if (this.view.mode === 'cursor-drag') {
        void this.probeAtPointer(ev.offsetX, ev.offsetY);
        return;
      }
      this.drag = {
        x: ev.offsetX,
        y: ev.offsetY,
        region: trackballRegion(ev.offsetX, ev.offsetY, vp),
      };
    };
    this.canvas.onpointermove = (ev) => {
      if (!this.drag) return;
      const vp = this.viewport();
      const dx = ev.offsetX - this.drag.x;
      const dy = ev.offsetY - this.drag.y;
      if (this.view.mode === 'zoom') {
        this.camera.zoom(Math.exp(dy * 0.005));
      } else if (ev.shiftKey) {
        this.camera.pan(dx, dy, vp);
      } else if (this.drag.region === 'border') {
        this.camera.roll(twistDelta(this.drag.x, this.drag.y, ev.offsetX, ev.offsetY, vp));
      } else {
        this.camera.rotate(-dx * 0.01, dy * 0.01);
      }
      this.drag = { ...this.drag, x: ev.offsetX, y: ev.offsetY };
      this.draw();
    };
    this.canvas.onpointerup = () => {
      this.drag = null;
    };
    this.canvas.onwheel = (ev) => {
      ev.preventDefault();
      this.camera.zoom(Math.exp(ev.deltaY * 0.001));
      this.draw();
    };
  }
}
