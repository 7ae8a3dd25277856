import type { ApiClient } from "./api.js";
import type { Meta } from "./types.js";

export interface PanelState {
  connected: boolean;
  meta: Meta | null;
}

/**
 * Headless steering surface behind the control buttons. Commands go
 * straight to POST /api/v1/control; observed state only ever comes
 * back from /api/v1/meta, never from local bookkeeping, so the panel
 * cannot drift from the service.
 */
export class ControlPanel {
  state: PanelState = { connected: false, meta: null };

  constructor(private readonly api: ApiClient) {}

  async refreshMeta(): Promise<PanelState> {
    try {
      this.state = { connected: true, meta: await this.api.meta() };
    } catch {
      this.state = { connected: false, meta: null };
    }
    return this.state;
  }

  async pause(): Promise<void> {
    await this.api.control("pause");
    await this.refreshMeta();
  }

  async resume(): Promise<void> {
    await this.api.control("resume");
    await this.refreshMeta();
  }

  async stepSlot(): Promise<void> {
    await this.api.control("step_slot");
    await this.refreshMeta();
  }

  async killNode(target: number): Promise<void> {
    await this.api.control("kill_node", { target });
    await this.refreshMeta();
  }

  async reviveNode(target: number): Promise<void> {
    await this.api.control("revive_node", { target });
    await this.refreshMeta();
  }

  async setSpeed(value: number): Promise<void> {
    await this.api.control("speed", { value });
    await this.refreshMeta();
  }

  async setLatencyScale(value: number): Promise<void> {
    await this.api.control("set_latency_scale", { value });
    await this.refreshMeta();
  }
}
