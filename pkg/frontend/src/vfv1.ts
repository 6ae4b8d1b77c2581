/**
 * Reader/writer for the VFV1 snapshot format: one ASCII header line
 *
 *     VFV1 n=<n> t=<time> gamma=<g>\n
 *
 * followed by 4*n*n little-endian float64 values, component planes
 * (rho, m_x, m_y, E) each row-major with the x index slow.
 */

export interface Snapshot {
  n: number;
  t: number;
  gamma: number;
  /** component-major payload, length 4*n*n */
  data: Float64Array;
}

export const COMPONENTS = ['rho', 'm_x', 'm_y', 'E'] as const;
export type Component = (typeof COMPONENTS)[number];

export function componentPlane(snap: Snapshot, component: Component | number): Float64Array {
  const idx = typeof component === 'number' ? component : COMPONENTS.indexOf(component);
  if (idx < 0 || idx > 3) throw new Error(`unknown component ${component}`);
  const size = snap.n * snap.n;
  return snap.data.subarray(idx * size, (idx + 1) * size);
}

/** value at cell (i, j) of a plane (i = x index, j = y index) */
export function planeAt(plane: Float64Array, n: number, i: number, j: number): number {
  return plane[i * n + j];
}

export function encodeSnapshot(snap: Snapshot): Buffer {
  const header = `VFV1 n=${snap.n} t=${snap.t} gamma=${snap.gamma}\n`;
  if (snap.data.length !== 4 * snap.n * snap.n) {
    throw new Error(`payload length ${snap.data.length} does not match n=${snap.n}`);
  }
  const payload = Buffer.alloc(snap.data.length * 8);
  for (let k = 0; k < snap.data.length; k++) {
    payload.writeDoubleLE(snap.data[k], k * 8);
  }
  return Buffer.concat([Buffer.from(header, 'ascii'), payload]);
}

export function decodeSnapshot(buf: Buffer): Snapshot {
  const nl = buf.indexOf(0x0a);
  if (nl < 0 || !buf.subarray(0, 5).equals(Buffer.from('VFV1 ', 'ascii'))) {
    throw new Error('not a VFV1 snapshot (bad magic at byte 0)');
  }
  const header = buf.subarray(0, nl).toString('ascii');
  const fields = new Map<string, string>();
  for (const token of header.split(/\s+/).slice(1)) {
    const eq = token.indexOf('=');
    if (eq > 0) fields.set(token.slice(0, eq), token.slice(eq + 1));
  }
  const n = Number(fields.get('n'));
  const t = Number(fields.get('t'));
  const gamma = Number(fields.get('gamma'));
  if (!Number.isInteger(n) || n <= 0 || Number.isNaN(t) || Number.isNaN(gamma)) {
    throw new Error(`malformed VFV1 header before byte ${nl + 1}: ${header}`);
  }
  const count = 4 * n * n;
  const start = nl + 1;
  if (buf.length - start < count * 8) {
    throw new Error(`truncated payload at byte ${buf.length}: need ${count * 8} bytes`);
  }
  const data = new Float64Array(count);
  for (let k = 0; k < count; k++) {
    data[k] = buf.readDoubleLE(start + k * 8);
  }
  return { n, t, gamma, data };
}
