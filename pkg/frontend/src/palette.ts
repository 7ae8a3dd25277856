import type { RoleAssignmentBody } from "./types.js";

export const ROLE_PRODUCER = "BlockProducer";
export const ROLE_COMMITTEE = "Committee";
export const ROLE_VALIDATOR = "Validator";

/** Display options. Plain data so scenes stay snapshot-comparable. */
export interface ViewOptions {
  rolePalette: Record<string, string>;
  messagePalette: Record<string, string>;
  representativeStroke: string;
  showMessages: boolean;
  showLabels: boolean;
  showHulls: boolean;
  /** view-time milliseconds advanced per wall millisecond */
  animationSpeed: number;
}

export function defaultOptions(): ViewOptions {
  return {
    rolePalette: {
      [ROLE_PRODUCER]: "#2ecc71",
      [ROLE_COMMITTEE]: "#8e44ad",
      [ROLE_VALIDATOR]: "#3498db",
    },
    messagePalette: {
      block_proposal: "#f39c12",
      attestation: "#00bcd4",
      attestation_forward: "#1abc9c",
      final_broadcast: "#e91e63",
    },
    representativeStroke: "#e74c3c",
    showMessages: true,
    showLabels: false,
    showHulls: false,
    animationSpeed: 1,
  };
}

/**
 * Deterministic fallback for names without a palette entry, so an
 * unknown role or message type always lands on the same color.
 */
export function fallbackColor(name: string): string {
  // FNV-1a over UTF-16 code units
  let h = 0x811c9dc5;
  for (let i = 0; i < name.length; i++) {
    h ^= name.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return `hsl(${h % 360}, 65%, 52%)`;
}

export function roleColor(options: ViewOptions, role: string): string {
  return options.rolePalette[role] ?? fallbackColor(role);
}

export function messageColor(options: ViewOptions, msgType: string): string {
  return options.messagePalette[msgType] ?? fallbackColor(msgType);
}

/** Add a user-named role to the palette; names never collide. */
export function addRole(options: ViewOptions, name: string, color?: string): void {
  if (name in options.rolePalette) {
    throw new Error(`role already defined: ${name}`);
  }
  options.rolePalette[name] = color ?? fallbackColor(name);
}

/** The display role of a node under a slot's assignment. */
export function roleOf(node: number, roles: RoleAssignmentBody): string {
  if (node === roles.producer) return ROLE_PRODUCER;
  if (roles.committee.includes(node)) return ROLE_COMMITTEE;
  return ROLE_VALIDATOR;
}

/** Line width in pixels, monotone in payload size, clamped to [1, 8]. */
export function strokeWidthForPayload(payloadBytes: number): number {
  const w = 1 + 2 * Math.log10(1 + payloadBytes / 64);
  return Math.min(8, Math.max(1, w));
}
