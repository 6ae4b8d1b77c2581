/**
 * Self-contained SVG line charts for the defect time series, arranged in
 * the four-panel layout (R1&R2 | R | E1&E2 | D_E) plus the entropy pair
 * (S | D_Ent).
 */

import type { DefectSeries } from './defects.js';

export interface Curve {
  label: string;
  x: number[];
  y: number[];
  color: string;
}

export interface PanelSpec {
  title: string;
  curves: Curve[];
}

const PANEL_W = 320;
const PANEL_H = 240;
const MARGIN = { left: 58, right: 12, top: 26, bottom: 34 };

function niceBounds(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) throw new Error('non-finite series values');
  if (hi - lo < 1e-300) {
    const pad = Math.max(1e-6, Math.abs(hi) * 0.1, 1e-3);
    lo -= pad;
    hi += pad;
  } else {
    const pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return [lo, hi];
}

function fmt(v: number): string {
  if (v === 0) return '0';
  const abs = Math.abs(v);
  if (abs >= 0.001 && abs < 10000) return String(Number(v.toPrecision(3)));
  return v.toExponential(1);
}

function renderPanel(spec: PanelSpec, ox: number, oy: number): string {
  const [xLo, xHi] = niceBounds(spec.curves.flatMap((c) => c.x));
  const [yLo, yHi] = niceBounds(spec.curves.flatMap((c) => c.y));
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;
  const sx = (v: number) => ox + MARGIN.left + ((v - xLo) / (xHi - xLo)) * plotW;
  const sy = (v: number) => oy + MARGIN.top + (1 - (v - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(`<text x="${ox + PANEL_W / 2}" y="${oy + 15}" text-anchor="middle" ` +
    `font-size="13" font-family="sans-serif">${spec.title}</text>`);
  // frame
  parts.push(`<rect x="${ox + MARGIN.left}" y="${oy + MARGIN.top}" width="${plotW}" ` +
    `height="${plotH}" fill="none" stroke="#444"/>`);
  // ticks
  for (let k = 0; k <= 4; k++) {
    const xv = xLo + (k / 4) * (xHi - xLo);
    const yv = yLo + (k / 4) * (yHi - yLo);
    const px = sx(xv);
    const py = sy(yv);
    parts.push(`<line x1="${px}" y1="${oy + MARGIN.top + plotH}" x2="${px}" ` +
      `y2="${oy + MARGIN.top + plotH + 4}" stroke="#444"/>`);
    parts.push(`<text x="${px}" y="${oy + MARGIN.top + plotH + 16}" text-anchor="middle" ` +
      `font-size="9" font-family="sans-serif">${fmt(xv)}</text>`);
    parts.push(`<line x1="${ox + MARGIN.left - 4}" y1="${py}" x2="${ox + MARGIN.left}" ` +
      `y2="${py}" stroke="#444"/>`);
    parts.push(`<text x="${ox + MARGIN.left - 6}" y="${py + 3}" text-anchor="end" ` +
      `font-size="9" font-family="sans-serif">${fmt(yv)}</text>`);
  }
  // curves (markers keep single-sample series visible)
  spec.curves.forEach((curve, ci) => {
    const pts = curve.x.map((v, k) => `${sx(v).toFixed(2)},${sy(curve.y[k]).toFixed(2)}`);
    if (pts.length > 1) {
      parts.push(`<polyline points="${pts.join(' ')}" fill="none" stroke="${curve.color}" ` +
        `stroke-width="1.5"/>`);
    }
    for (const p of pts) {
      const [px, py] = p.split(',');
      parts.push(`<circle cx="${px}" cy="${py}" r="1.6" fill="${curve.color}"/>`);
    }
    parts.push(`<text x="${ox + MARGIN.left + 8}" y="${oy + MARGIN.top + 12 + 12 * ci}" ` +
      `font-size="10" font-family="sans-serif" fill="${curve.color}">${curve.label}</text>`);
  });
  return parts.join('\n');
}

export function renderFigure(panels: PanelSpec[], columns: number): string {
  const rows = Math.ceil(panels.length / columns);
  const width = columns * PANEL_W;
  const height = rows * PANEL_H;
  const body = panels
    .map((p, k) => renderPanel(p, (k % columns) * PANEL_W, Math.floor(k / columns) * PANEL_H))
    .join('\n');
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">\n<rect width="100%" height="100%" fill="white"/>\n` +
    `${body}\n</svg>\n`;
}

export function defectPanels(series: DefectSeries): PanelSpec[] {
  const t = series.t;
  return [
    {
      title: 'Reynolds tensor norms',
      curves: [
        { label: 'R1', x: t, y: series.R1, color: '#1f77b4' },
        { label: 'R2', x: t, y: series.R2, color: '#d62728' },
      ],
    },
    { title: 'Reynolds defect R', curves: [{ label: 'R', x: t, y: series.R, color: '#2ca02c' }] },
    {
      title: 'Energy functionals',
      curves: [
        { label: 'E1', x: t, y: series.E1, color: '#1f77b4' },
        { label: 'E2', x: t, y: series.E2, color: '#d62728' },
      ],
    },
    { title: 'Energy defect D_E', curves: [{ label: 'D_E', x: t, y: series.DE, color: '#9467bd' }] },
  ];
}

export function entropyPanels(series: DefectSeries): PanelSpec[] {
  const t = series.t;
  return [
    { title: 'Total entropy S(t)', curves: [{ label: 'S', x: t, y: series.S, color: '#1f77b4' }] },
    {
      title: 'Entropy defect D_Ent',
      curves: [{ label: 'D_Ent', x: t, y: series.DEnt, color: '#d62728' }],
    },
  ];
}
