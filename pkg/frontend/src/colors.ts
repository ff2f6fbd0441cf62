/** Stable per-user color: hash the user id onto the hue wheel. */
export function userColor(userId: string): string {
  let hash = 2166136261;
  for (let i = 0; i < userId.length; i++) {
    hash ^= userId.charCodeAt(i);
    hash = Math.imul(hash, 16777619);
  }
  const hue = ((hash >>> 0) % 360 + 360) % 360;
  return `hsl(${hue}, 70%, 45%)`;
}

export const HEX_TODO_COLOR = "rgba(220, 50, 47, 0.35)"; // red
export const HEX_DONE_COLOR = "rgba(38, 139, 210, 0.35)"; // blue
