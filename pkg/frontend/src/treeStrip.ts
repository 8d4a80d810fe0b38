/** Schematic merge-tree strip: one bar per persistence pair.
 *
 * Instead of a full node-link tree, the tree panel shows pairs as bars
 * sorted by persistence. Clicking a bar pre-fills the query threshold
 * with that persistence, so "simplify to the features at least this
 * deep" is one click.
 */

import type { TreeDoc } from "./types.js";

export interface Bar {
  minNode: number;
  deathNode: number;
  persistence: number;
  essential: boolean;
  /** Height in [0, 1] relative to the largest finite persistence. */
  height: number;
}

export function buildBars(tree: TreeDoc): Bar[] {
  const pairs = tree.pairs
    .slice()
    .sort((a, b) => b.persistence - a.persistence);
  const top = pairs.length > 0 ? (pairs[0] as (typeof pairs)[0]).persistence : 0;
  return pairs.map((p) => ({
    minNode: p.min_node,
    deathNode: p.death_node,
    persistence: p.persistence,
    essential: p.essential,
    height: top > 0 ? p.persistence / top : 0,
  }));
}

/** The threshold a click on bar `i` should pre-fill. */
export function thresholdForBar(bars: Bar[], i: number): number {
  const bar = bars[i];
  if (bar === undefined) {
    throw new RangeError(`no bar ${i}; strip has ${bars.length}`);
  }
  return bar.persistence;
}
