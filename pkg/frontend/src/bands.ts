import type { Band } from "./types";

/**
 * Risk band for a probability, mirroring the server's thresholds
 * (boundaries inclusive below).  Used to color values and to cross-check
 * that displayed levels are consistent with the service's assignment; the
 * authoritative label always comes from the report.
 */
export function bandOf(p: number): Band {
  if (p < 0 || p > 1 || Number.isNaN(p)) {
    throw new RangeError(`probability out of range: ${p}`);
  }
  if (p <= 0.25) return "NotSignificant";
  if (p <= 0.5) return "Low";
  if (p <= 0.75) return "Medium";
  return "High";
}

export const BAND_COLORS: Record<Band, string> = {
  NotSignificant: "#4d9078",
  Low: "#d9b23a",
  Medium: "#e07b39",
  High: "#c8403a",
};

export const BAND_ORDER: Band[] = ["NotSignificant", "Low", "Medium", "High"];
