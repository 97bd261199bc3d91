import type {
  CellDoc,
  DepositDoc,
  ElectrodeDoc,
  ProbeDoc,
  Progress,
  ShadingDoc,
  SliceDoc,
  StreamlinesDoc,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = 'ApiError';
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Builds a request URL from a path and defined query parameters. */
export function buildUrl(
  base: string,
  path: string,
  params?: Record<string, number | string | undefined>,
): string {
  const root = base.replace(/\/+$/, '');
  const query = new URLSearchParams();
  if (params) {
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
  }
  const qs = query.toString();
  return qs ? `${root}${path}?${qs}` : `${root}${path}`;
}

/** Typed client for the simulator service; all state lives server-side. */
export class ApiClient {
  constructor(
    private readonly base: string = '',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    options: {
      params?: Record<string, number | string | undefined>;
      body?: unknown;
    } = {},
  ): Promise<T> {
    const response = await this.fetchImpl(buildUrl(this.base, path, options.params), {
      method,
      headers: options.body !== undefined ? { 'Content-Type': 'application/json' } : undefined,
      body: options.body !== undefined ? JSON.stringify(options.body) : undefined,
    });
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail =
        typeof payload?.detail === 'string' ? payload.detail : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  getCell(): Promise<CellDoc> {
    return this.request('GET', '/cell');
  }

  putCell(doc: CellDoc): Promise<{ electrodes: number; state_loaded: boolean }> {
    return this.request('PUT', '/cell', { body: doc });
  }

  addElectrode(electrode: Partial<ElectrodeDoc>): Promise<{ id: number }> {
    return this.request('POST', '/electrode', { body: electrode });
  }

  patchElectrode(id: number, patch: Partial<ElectrodeDoc>): Promise<{ id: number }> {
    return this.request('PATCH', `/electrode/${id}`, { body: patch });
  }

  deleteElectrode(id: number): Promise<{ deleted: number }> {
    return this.request('DELETE', `/electrode/${id}`);
  }

  step(steps?: number): Promise<Progress> {
    return this.request('POST', '/simulate/step', { body: steps ? { steps } : {} });
  }

  run(): Promise<Progress> {
    return this.request('POST', '/simulate/run');
  }

  cancel(): Promise<Progress> {
    return this.request('POST', '/simulate/cancel');
  }

  status(): Promise<Progress> {
    return this.request('GET', '/simulate/status');
  }

  streamlines(options: { density?: number; maxArcUni?: number; maxArcBip?: number } = {}): Promise<StreamlinesDoc> {
    return this.request('GET', '/streamlines', { params: { ...options } });
  }

  slice(axis: 'x' | 'y' | 'z', index: number, quantity: 'V' | 'Jmag' = 'V'): Promise<SliceDoc> {
    return this.request('GET', '/slice', { params: { axis, index, quantity } });
  }

  probe(x: number, y: number, z: number): Promise<ProbeDoc> {
    return this.request('GET', '/probe', { params: { x, y, z } });
  }

  deposit(electrodeId: number): Promise<DepositDoc> {
    return this.request('GET', `/deposit/${electrodeId}`);
  }

  shading(options: { electrode_id?: number; start_factor?: number; stop_factor?: number } = {}): Promise<ShadingDoc> {
    return this.request('GET', '/shading', { params: { ...options } });
  }
}
