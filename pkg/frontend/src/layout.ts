/**
 * Presentation-only node layout: a deterministic ring for automatic
 * placement, with manual drag positions preserved across relayouts.
 */

import type { GraphViewModel } from "./graph.js";

export interface LayoutOptions {
  width: number;
  height: number;
}

export function autoLayout(vm: GraphViewModel, options: LayoutOptions): void {
  const placed = vm.nodes.filter((n) => n.x !== 0 || n.y !== 0);
  const pending = vm.nodes.filter((n) => n.x === 0 && n.y === 0);
  if (!pending.length) return;
  const cx = options.width / 2;
  const cy = options.height / 2;
  const radius = Math.max(60, Math.min(cx, cy) - 60);
  const total = vm.nodes.length;
  pending.forEach((node, i) => {
    const slot = placed.length + i;
    const angle = (2 * Math.PI * slot) / Math.max(total, 1) - Math.PI / 2;
    node.x = Math.round(cx + radius * Math.cos(angle));
    node.y = Math.round(cy + radius * Math.sin(angle));
  });
}

export function moveNode(vm: GraphViewModel, id: string, x: number, y: number): void {
  const node = vm.node(id);
  node.x = x;
  node.y = y; // drag is presentation-only: dirty flag untouched
}
