/** Viridis colormap sampled at 16 anchors, linearly interpolated. */

const ANCHORS: [number, number, number][] = [
  [68, 1, 84], [72, 26, 108], [71, 47, 125], [65, 68, 135],
  [57, 86, 140], [49, 104, 142], [42, 120, 142], [35, 136, 142],
  [31, 152, 139], [34, 168, 132], [53, 183, 121], [84, 197, 104],
  [122, 209, 81], [165, 219, 54], [210, 226, 27], [253, 231, 37],
];

/** map x in [0,1] to RGB */
export function viridis(x: number): [number, number, number] {
  const clamped = Math.min(1, Math.max(0, x));
  const pos = clamped * (ANCHORS.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, ANCHORS.length - 1);
  const frac = pos - lo;
  return [0, 1, 2].map((c) => Math.round(ANCHORS[lo][c] + frac * (ANCHORS[hi][c] - ANCHORS[lo][c]))) as [
    number,
    number,
    number,
  ];
}
