/** Parser for the defect time-series CSV emitted by the hierarchy pipeline. */

export const DEFECT_HEADER = ['t', 'R1', 'R2', 'R', 'E1', 'E2', 'DE', 'S', 'DEnt'] as const;
export type DefectColumn = (typeof DEFECT_HEADER)[number];

export type DefectSeries = Record<DefectColumn, number[]>;

export function parseDefectsCsv(text: string): DefectSeries {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0 || lines[0].split(',').join(',') !== DEFECT_HEADER.join(',')) {
    throw new Error(`unexpected defects CSV header: ${lines[0] ?? '(empty file)'}`);
  }
  const series = Object.fromEntries(DEFECT_HEADER.map((c) => [c, [] as number[]])) as DefectSeries;
  for (let row = 1; row < lines.length; row++) {
    if (lines[row].trim() === '') continue;
    const cells = lines[row].split(',');
    if (cells.length !== DEFECT_HEADER.length) {
      throw new Error(`row ${row} has ${cells.length} cells, expected ${DEFECT_HEADER.length}`);
    }
    DEFECT_HEADER.forEach((col, k) => {
      const v = Number(cells[k]);
      if (Number.isNaN(v)) throw new Error(`row ${row}, column ${col}: not a number`);
      series[col].push(v);
    });
  }
  if (series.t.length === 0) throw new Error('defects CSV holds no data rows');
  return series;
}
