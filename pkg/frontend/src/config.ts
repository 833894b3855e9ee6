/**
 * API base URL resolution.
 *
 * One env-style knob: `API_BASE`. In the browser it can be injected as
 * `globalThis.API_BASE` (e.g. a <script> tag before the bundle); under
 * Node (tests) the plain environment variable works too.
 */

const DEFAULT_BASE = "http://localhost:8000";

export function apiBase(): string {
  const g = globalThis as Record<string, unknown>;
  if (typeof g.API_BASE === "string" && g.API_BASE) {
    return (g.API_BASE as string).replace(/\/+$/, "");
  }
  const env = (g.process as { env?: Record<string, string> } | undefined)?.env;
  if (env && env.API_BASE) {
    return env.API_BASE.replace(/\/+$/, "");
  }
  return DEFAULT_BASE;
}
