/** JSON document shapes served by the simulator HTTP API. */

export type ElectrodeKind = 'anode' | 'cathode' | 'bipolar';

/** Inclusive grid-index bounds [i1, i2, j1, j2, k1, k2]. */
export type Box = [number, number, number, number, number, number];

export interface Polarization {
  e_r: number;
  k_a: number;
  k_c: number;
}

export interface ElectrodeDoc {
  kind: ElectrodeKind;
  box: Box;
  split_index: number | null;
  polarization: Polarization;
  metal_potential: number;
  floating: boolean;
}

export interface GridDoc {
  nx: number;
  ny: number;
  nz: number;
  h: number;
}

export interface SolverDoc {
  tolerance: number;
  max_iterations: number;
  inner_steps: number;
}

export interface CellDoc {
  format: string;
  version: number;
  grid: GridDoc;
  conductivity: number;
  electrodes: ElectrodeDoc[];
  solver?: SolverDoc;
}

export type SolveStatus = 'idle' | 'stepping' | 'running' | 'converged' | 'diverged';

export interface Progress {
  status: SolveStatus;
  iterations: number;
  last_max_delta: number | null;
  converged: boolean;
}

export interface StreamlineDoc {
  termination: string;
  positions: number[][];
  tangents: number[][];
  magnitudes: number[];
  potentials: number[];
}

export interface StreamlineGroupDoc {
  electrode: number;
  lines: StreamlineDoc[];
}

export interface StreamlinesDoc {
  format: string;
  version: number;
  line_count: number;
  groups: StreamlineGroupDoc[];
}

export interface SliceDoc {
  axis: string;
  index: number;
  quantity: string;
  dims: [number, number];
  order: string;
  values: number[];
}

export interface ProbeDoc {
  position: [number, number, number];
  potential: number;
  current: [number, number, number];
  current_magnitude: number;
}

export interface DepositFaceDoc {
  dims: [number, number];
  order: string;
  values: number[];
  min: number;
  max: number;
}

export interface DepositDoc {
  electrode: number;
  faces: Record<string, DepositFaceDoc>;
}

export interface ShadingDoc {
  light_table: { resolution: number; entries: number[] };
  lighting: { ka: number; kd: number; ks: number; s: number; p: number };
  colormaps: Record<string, { controls: number[][] }>;
  autofocus: {
    focus: [number, number, number];
    distance: number;
    fog: { z_start: number; z_end: number };
  };
}
