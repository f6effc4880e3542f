// Display formatting only; no unit conversions or derived quantities.

export function formatKwh(value: number): string {
  return `${value.toFixed(2)} kWh`;
}

// Ratios whose denominator is zero are undefined, shown as an em dash.
export function formatRatio(ratio: number, denominator: number): string {
  if (denominator === 0) {
    return '—';
  }
  return `${(ratio * 100).toFixed(1)} %`;
}

export function formatScrDelta(value: number): string {
  const sign = value >= 0 ? '+' : '';
  return `${sign}${(value * 100).toFixed(2)} pp`;
}

export function formatDistance(value: number): string {
  return value.toFixed(4);
}
