import type { ApiClient } from '../api/client';
import type { Progress } from '../api/types';

export interface SimulationEvents {
  /** Fired whenever new progress is known (step result or poll). */
  onProgress: (progress: Progress) => void;
  /** Fired when fresh results should be refetched (partial or final). */
  onResults: () => void;
}

/**
 * Step/Run controller. Step is synchronous; Run starts a background solve
 * and polls status, refreshing results on every poll so partial fields are
 * visible while the solver works.
 */
export class SimulationController {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly events: SimulationEvents,
    private readonly pollMs = 500,
  ) {}

  get polling(): boolean {
    return this.timer !== null;
  }

  async step(steps?: number): Promise<Progress> {
    const progress = await this.api.step(steps);
    this.events.onProgress(progress);
    if (progress.iterations > 0) this.events.onResults();
    return progress;
  }

  async run(): Promise<Progress> {
    const progress = await this.api.run();
    this.events.onProgress(progress);
    this.startPolling();
    return progress;
  }

  async cancel(): Promise<Progress> {
    this.stopPolling();
    const progress = await this.api.cancel();
    this.events.onProgress(progress);
    return progress;
  }

  private startPolling(): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      void this.poll();
    }, this.pollMs);
  }

  private stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async poll(): Promise<Progress> {
    const progress = await this.api.status();
    this.events.onProgress(progress);
    if (progress.iterations > 0) this.events.onResults();
    if (progress.status !== 'running') this.stopPolling();
    return progress;
  }

  dispose(): void {
    this.stopPolling();
  }
}
