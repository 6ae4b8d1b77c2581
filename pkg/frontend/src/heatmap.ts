/**
 * Density heatmap renderer: snapshot plane -> upscaled PNG with a colorbar
 * and a title bar carrying t and n from the header.
 */

import { viridis } from './colormap.js';
import { drawText } from './font.js';
import { Raster, encodePng } from './png.js';
import { componentPlane, planeAt, type Component, type Snapshot } from './vfv1.js';

const TITLE_H = 12;
const BAR_W = 14;
const BAR_GAP = 4;
const LABEL_W = 60;

export function renderHeatmap(snap: Snapshot, component: Component | number = 'rho'): Buffer {
  const plane = componentPlane(snap, component);
  const n = snap.n;
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of plane) {
    lo = Math.min(lo, v);
    hi = Math.max(hi, v);
  }
  const span = hi - lo;
  const scale = Math.max(1, Math.min(8, Math.ceil(256 / n)));
  const imgSize = n * scale;
  const width = imgSize + BAR_GAP + BAR_W + LABEL_W;
  const height = TITLE_H + imgSize;
  const raster = new Raster(width, height);

  // title: simulation time and resolution from the snapshot header
  drawText(raster, 2, 2, `t=${formatNumber(snap.t)}  n=${n}`);

  for (let py = 0; py < imgSize; py++) {
    const j = n - 1 - Math.floor(py / scale); // image rows run top (y=1) down
    for (let px = 0; px < imgSize; px++) {
      const i = Math.floor(px / scale);
      const v = planeAt(plane, n, i, j);
      const x = span > 0 ? (v - lo) / span : 0.5; // degenerate range: mid color
      raster.set(px, TITLE_H + py, viridis(x));
    }
  }

  // colorbar with min/max labels
  const barX = imgSize + BAR_GAP;
  for (let py = 0; py < imgSize; py++) {
    const x = imgSize > 1 ? 1 - py / (imgSize - 1) : 0.5;
    for (let bx = 0; bx < BAR_W; bx++) raster.set(barX + bx, TITLE_H + py, viridis(x));
  }
  drawText(raster, barX + BAR_W + 2, TITLE_H + 1, formatNumber(hi));
  drawText(raster, barX + BAR_W + 2, TITLE_H + imgSize - 8, formatNumber(lo));
  return encodePng(raster);
}

function formatNumber(v: number): string {
  if (v === 0) return '0';
  const abs = Math.abs(v);
  if (abs >= 0.01 && abs < 10000) {
    return String(Number(v.toPrecision(4)));
  }
  return v.toExponential(2);
}
