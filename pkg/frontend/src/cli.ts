#!/usr/bin/env node
/**
 * plots density <snapshot.vfv1> -o <figure.png> [--component rho|m_x|m_y|E]
 * plots defects <defects.csv> -o <figure-dir>
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';
import { pathToFileURL } from 'node:url';

import { parseDefectsCsv } from './defects.js';
import { renderHeatmap } from './heatmap.js';
import { defectPanels, entropyPanels, renderFigure } from './series.js';
import { decodeSnapshot, type Component } from './vfv1.js';

interface Args {
  command: string;
  input: string;
  out: string;
  component: Component;
}

function parseArgs(argv: string[]): Args {
  const [command, input, ...rest] = argv;
  if (!command || !input) {
    throw new Error('usage: plots density <snap.vfv1> -o <out.png> | plots defects <csv> -o <dir>');
  }
  let out = '';
  let component: Component = 'rho';
  for (let k = 0; k < rest.length; k++) {
    if (rest[k] === '-o' || rest[k] === '--out') out = rest[++k];
    else if (rest[k] === '--component') component = rest[++k] as Component;
    else throw new Error(`unknown argument ${rest[k]}`);
  }
  if (!out) throw new Error('missing -o <output>');
  return { command, input, out, component };
}

export function densityCommand(input: string, out: string, component: Component = 'rho'): void {
  const snap = decodeSnapshot(readFileSync(input));
  writeFileSync(out, renderHeatmap(snap, component));
}

export function defectsCommand(input: string, outDir: string): { panels: string; entropy: string } {
  const series = parseDefectsCsv(readFileSync(input, 'utf8'));
  mkdirSync(outDir, { recursive: true });
  const panelsPath = join(outDir, 'defects_panels.svg');
  const entropyPath = join(outDir, 'entropy_panels.svg');
  writeFileSync(panelsPath, renderFigure(defectPanels(series), 2));
  writeFileSync(entropyPath, renderFigure(entropyPanels(series), 2));
  return { panels: panelsPath, entropy: entropyPath };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error((err as Error).message);
    return 2;
  }
  try {
    if (args.command === 'density') {
      densityCommand(args.input, args.out, args.component);
      console.log(`wrote ${args.out}`);
    } else if (args.command === 'defects') {
      const { panels, entropy } = defectsCommand(args.input, args.out);
      console.log(`wrote ${panels} and ${entropy}`);
    } else {
      console.error(`unknown command ${args.command}`);
      return 2;
    }
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
  return 0;
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
