// Wire shapes of the telemetry service (GET /api/v1/...). The dashboard
// holds no protocol logic: everything rendered is a pure function of
// these records.

export type EventKind =
  | "role_assignment"
  | "topology"
  | "message"
  | "slot_outcome"
  | "fault"
  | "counter";

export interface TelemetryRecord {
  ts_ms: number;
  seq: number;
  kind: EventKind;
  body: Record<string, unknown>;
}

export interface RoleAssignmentBody {
  slot: number;
  slot_seed: string;
  producer: number;
  committee: number[];
  validators: number[];
}

export interface TopologyBody {
  slot: number;
  k: number;
  points: number[][]; // unit-square embedding, one [x, y] per node
  assignment: number[]; // node index -> cluster index
  centroids: number[][];
  representatives: number[]; // cluster index -> node id
  objective_trace: number[];
}

export interface MessageBody {
  id: number;
  slot: number;
  msg_type: string;
  src: number;
  dst: number;
  payload_bytes: number;
  send_ms: number;
  recv_ms: number;
  delivered: boolean;
}

export interface SlotOutcomeBody {
  slot: number;
  kind: "finalized" | "skip";
  vote_count: number;
  quorum_threshold: number;
  block_digest?: string;
  aggregate?: {
    block_digest: string;
    signers: number[];
    tag: string;
  };
}

/** One slot's view, as served by GET /api/v1/snapshot/{slot}. */
export interface SlotSnapshot {
  slot: number;
  roles: RoleAssignmentBody | null;
  topology: TopologyBody | null;
  outcome: SlotOutcomeBody | null;
  messages: MessageBody[];
}

export interface RunStats {
  messages_sent: number;
  messages_delivered: number;
  messages_dropped: number;
  late_votes: number;
}

export interface Meta {
  mode: "live" | "replay";
  config: Record<string, unknown> | null;
  kernel_backend: string;
  last_seq: number | null;
  event_count: number;
  paused: boolean;
  speed: number | null;
  finished: boolean;
  current_slot: number;
  now_ms: number;
  stats: RunStats;
}

export type ControlCommand =
  | "pause"
  | "resume"
  | "step_slot"
  | "kill_node"
  | "revive_node"
  | "set_latency_scale"
  | "speed";
