/** SVG projection of the ViewModel: circular static layout with cluster
 * members grouped on one arc, link click-to-toggle, forwarding overlay,
 * and the convergence / churn tickers. */

import { linkId, ViewModel } from "./viewmodel.js";

const ROLE_COLOR: Record<string, string> = {
  legacy: "#4a7fb5",
  cluster: "#d9822b",
  client: "#3fa34d",
  collector: "#8a8a8a",
};

export interface Layout {
  positions: Map<number, { x: number; y: number }>;
}

/** Cluster members share one arc so the SDN part reads as one group. */
export function circularLayout(vm: ViewModel, width: number, height: number): Layout {
  const positions = new Map<number, { x: number; y: number }>();
  if (!vm.topology) return { positions };
  const cx = width / 2;
  const cy = height / 2;
  const r = Math.min(width, height) * 0.38;
  const cluster = vm.topology.nodes.filter((n) => n.role === "cluster").map((n) => n.asn);
  const legacy = vm.topology.nodes.filter((n) => n.role === "legacy").map((n) => n.asn);
  const ring = [...cluster.sort((a, b) => a - b), ...legacy.sort((a, b) => a - b)];
  ring.forEach((asn, i) => {
    const angle = (2 * Math.PI * i) / ring.length - Math.PI / 2;
    positions.set(asn, { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  });
  const special = vm.topology.nodes.filter((n) => n.role === "client" || n.role === "collector");
  special.forEach((node, i) => {
    positions.set(node.asn, {
      x: cx + (node.role === "client" ? 0 : r * 0.4),
      y: node.role === "client" ? cy + r * 1.45 : cy,
    });
  });
  return { positions };
}

export interface RenderCallbacks {
  onToggleLink: (a: number, b: number, up: boolean) => void;
}

export function render(
  svg: SVGSVGElement,
  vm: ViewModel,
  callbacks: RenderCallbacks,
): void {
  const width = svg.clientWidth || 900;
  const height = svg.clientHeight || 600;
  svg.replaceChildren();
  if (!vm.topology) return;
  const { positions } = circularLayout(vm, width, height);
  const ns = "http://www.w3.org/2000/svg";

  for (const link of vm.topology.links) {
    const pa = positions.get(link.a);
    const pb = positions.get(link.b);
    if (!pa || !pb) continue;
    const up = vm.linkUp.get(linkId(link.a, link.b)) ?? link.up;
    const line = document.createElementNS(ns, "line");
    line.setAttribute("x1", String(pa.x));
    line.setAttribute("y1", String(pa.y));
    line.setAttribute("x2", String(pb.x));
    line.setAttribute("y2", String(pb.y));
    line.setAttribute("stroke", up ? "#b9c4cf" : "#e05959");
    line.setAttribute("stroke-width", up ? "1.5" : "2.5");
    if (!up) line.setAttribute("stroke-dasharray", "6 4");
    line.setAttribute("data-link", linkId(link.a, link.b));
    line.style.cursor = "pointer";
    line.addEventListener("click", () => callbacks.onToggleLink(link.a, link.b, !up));
    svg.appendChild(line);
  }

  if (vm.tree) {
    for (const [asnStr, nh] of Object.entries(vm.tree.next_hop)) {
      if (nh === null) continue;
      const pa = positions.get(Number(asnStr));
      const pb = positions.get(nh);
      if (!pa || !pb) continue;
      const arrow = document.createElementNS(ns, "line");
      const shrink = 0.18;
      arrow.setAttribute("x1", String(pa.x + (pb.x - pa.x) * shrink));
      arrow.setAttribute("y1", String(pa.y + (pb.y - pa.y) * shrink));
      arrow.setAttribute("x2", String(pb.x - (pb.x - pa.x) * shrink));
      arrow.setAttribute("y2", String(pb.y - (pb.y - pa.y) * shrink));
      arrow.setAttribute("stroke", "#3fa34d");
      arrow.setAttribute("stroke-width", "3");
      arrow.setAttribute("marker-end", "url(#fwd-arrow)");
      arrow.setAttribute("opacity", "0.75");
      svg.appendChild(arrow);
    }
  }

  const defs = document.createElementNS(ns, "defs");
  defs.innerHTML =
    '<marker id="fwd-arrow" viewBox="0 0 10 10" refX="9" refY="5" ' +
    'markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
    '<path d="M 0 0 L 10 5 L 0 10 z" fill="#3fa34d"/></marker>';
  svg.appendChild(defs);

  const loops = new Set(vm.loopAses());
  const holes = new Set(vm.blackholeAses());
  for (const node of vm.topology.nodes) {
    const pos = positions.get(node.asn);
    if (!pos) continue;
    const g = document.createElementNS(ns, "g");
    const circle = document.createElementNS(ns, "circle");
    circle.setAttribute("cx", String(pos.x));
    circle.setAttribute("cy", String(pos.y));
    circle.setAttribute("r", node.role === "collector" ? "8" : "13");
    circle.setAttribute("fill", ROLE_COLOR[node.role] ?? "#999");
    if (loops.has(node.asn)) {
      circle.setAttribute("stroke", "#d62828");
      circle.setAttribute("stroke-width", "4");
    } else if (holes.has(node.asn)) {
      circle.setAttribute("stroke", "#222");
      circle.setAttribute("stroke-width", "4");
      circle.setAttribute("stroke-dasharray", "3 2");
    }
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", String(pos.x));
    label.setAttribute("y", String(pos.y + 4));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("font-size", "11");
    label.setAttribute("fill", "#fff");
    label.textContent = String(node.asn);
    g.appendChild(circle);
    g.appendChild(label);
    svg.appendChild(g);
  }
}

export function renderTickers(el: HTMLElement, vm: ViewModel): void {
  const rate = vm.updateSeries.length
    ? vm.updateSeries[vm.updateSeries.length - 1].rate
    : 0;
  const elapsed = vm.elapsedSinceTriggerS();
  const loops = vm.loopAses().length;
  const parts = [
    vm.converged() ? "converged" : "converging",
    elapsed !== null ? `last trigger +${elapsed.toFixed(3)} s (sim)` : "no trigger yet",
    `${rate} updates/s`,
    loops ? `${loops} transient loop(s)` : "loop-free",
  ];
  el.textContent = parts.join("  |  ");
  el.style.color = loops ? "#d62828" : vm.converged() ? "#3fa34d" : "#444";
}
