import type {
  MessageBody,
  RoleAssignmentBody,
  SlotOutcomeBody,
  SlotSnapshot,
  TelemetryRecord,
  TopologyBody,
} from "./types.js";

/**
 * Client-side mirror of the telemetry stream, bucketed by slot so the
 * render loop can ask for any slot's view without another round trip.
 * Records must arrive in seq order; duplicates and replays are ignored.
 */
export class EventStore {
  private slots = new Map<number, SlotSnapshot>();
  private _lastSeq: number | null = null;
  private _latestSlot: number | null = null;
  private _runComplete = false;

  get lastSeq(): number | null {
    return this._lastSeq;
  }

  get latestSlot(): number | null {
    return this._latestSlot;
  }

  get runComplete(): boolean {
    return this._runComplete;
  }

  private bucket(slot: number): SlotSnapshot {
    let snap = this.slots.get(slot);
    if (snap === undefined) {
      snap = { slot, roles: null, topology: null, outcome: null, messages: [] };
      this.slots.set(slot, snap);
    }
    return snap;
  }

  ingest(record: TelemetryRecord): void {
    if (this._lastSeq !== null && record.seq <= this._lastSeq) return;
    this._lastSeq = record.seq;
    switch (record.kind) {
      case "role_assignment": {
        const body = record.body as unknown as RoleAssignmentBody;
        this.bucket(body.slot).roles = body;
        if (this._latestSlot === null || body.slot > this._latestSlot) {
          this._latestSlot = body.slot;
        }
        break;
      }
      case "topology": {
        const body = record.body as unknown as TopologyBody;
        this.bucket(body.slot).topology = body;
        break;
      }
      case "message": {
        const body = record.body as unknown as MessageBody;
        this.bucket(body.slot).messages.push(body);
        break;
      }
      case "slot_outcome": {
        const body = record.body as unknown as SlotOutcomeBody;
        this.bucket(body.slot).outcome = body;
        break;
      }
      case "counter": {
        if ((record.body as { name?: string }).name === "run_complete") {
          this._runComplete = true;
        }
        break;
      }
      case "fault":
        break;
    }
  }

  ingestAll(records: Iterable<TelemetryRecord>): void {
    for (const record of records) this.ingest(record);
  }

  /** The assembled view of one slot (empty shell if nothing arrived). */
  slotSnapshot(slot: number): SlotSnapshot {
    return (
      this.slots.get(slot) ?? {
        slot,
        roles: null,
        topology: null,
        outcome: null,
        messages: [],
      }
    );
  }

  outcomes(): SlotOutcomeBody[] {
    const out: SlotOutcomeBody[] = [];
    for (const slot of [...this.slots.keys()].sort((a, b) => a - b)) {
      const outcome = this.slots.get(slot)?.outcome;
      if (outcome) out.push(outcome);
    }
    return out;
  }
}
