// WCAG AA contrast for the palette pairs actually used in styles.css.
// jsdom cannot compute rendered colors, so the ratios are checked on the
// declared custom-property values directly.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

const here = dirname(fileURLToPath(import.meta.url));
const css = readFileSync(join(here, "..", "styles.css"), "utf-8");

function variable(name: string): string {
  const match = css.match(new RegExp(`${name}:\\s*(#[0-9a-fA-F]{6})`));
  if (!match) throw new Error(`no hex value for ${name} in styles.css`);
  return match[1]!;
}

function luminance(hex: string): number {
  const channels = [1, 3, 5].map((i) => {
    const value = parseInt(hex.slice(i, i + 2), 16) / 255;
    return value <= 0.03928 ? value / 12.92 : ((value + 0.055) / 1.055) ** 2.4;
  });
  return 0.2126 * channels[0]! + 0.7152 * channels[1]! + 0.0722 * channels[2]!;
}

function ratio(fg: string, bg: string): number {
  const [light, dark] = [luminance(fg), luminance(bg)].sort((a, b) => b - a);
  return (light! + 0.05) / (dark! + 0.05);
}

const PAIRS: Array<[string, string, string]> = [
  ["--ink", "--paper", "body text"],
  ["--user-ink", "--user-bubble", "user bubble"],
  ["--ink", "--character-bubble", "character bubble"],
  ["--ink", "--panel", "feedback panel"],
  ["--accent-ink", "--accent", "primary buttons"],
  ["--alert-ink", "--alert-paper", "error notices"],
  ["--muted", "--paper", "instruction and typing text"],
  ["--ink", "--paper", "option buttons"],
];

describe("color contrast (WCAG AA, 4.5:1)", () => {
  it.each(PAIRS)("%s on %s (%s)", (fg, bg, _label) => {
    expect(ratio(variable(fg), variable(bg))).toBeGreaterThanOrEqual(4.5);
  });
});
