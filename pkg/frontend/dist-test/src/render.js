/** SVG molecule rendering: atoms colored by element, bond order drawn as
 * parallel line multiplicity. */
import { GraphSchemaError, layoutGraph } from "./layout.js";
const ELEMENT_COLORS = {
    C: "#4a4a4a",
    N: "#2f6fde",
    O: "#d43f3f",
    F: "#3faf6e",
    P: "#e38a1d",
    S: "#c9b41b",
    Cl: "#58c74c",
    Br: "#a0522d",
    I: "#8b45c1",
};
const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 360;
const MARGIN = 40;
const BOND_GAP = 3.2;
function svgEl(tag, attrs) {
    const el = document.createElementNS(SVG_NS, tag);
    for (const [key, value] of Object.entries(attrs)) {
        el.setAttribute(key, String(value));
    }
    return el;
}
/** Render into `container`, replacing previous content. Invalid graph JSON
 * raises GraphSchemaError after painting an error banner. */
export function renderMolecule(container, graph, seed = 1) {
    container.textContent = "";
    let positions;
    try {
        positions = layoutGraph(graph, seed);
    }
    catch (err) {
        if (err instanceof GraphSchemaError) {
            const banner = document.createElement("div");
            banner.className = "schema-error";
            banner.textContent = `bad graph payload: ${err.message}`;
            container.appendChild(banner);
        }
        throw err;
    }
    const svg = svgEl("svg", {
        viewBox: `0 0 ${SIZE} ${SIZE}`,
        width: SIZE,
        height: SIZE,
    });
    const scale = (p) => ({
        x: MARGIN + p.x * (SIZE - 2 * MARGIN),
        y: MARGIN + p.y * (SIZE - 2 * MARGIN),
    });
    for (const [i, j, order] of graph.bonds) {
        const a = scale(positions[i]);
        const b = scale(positions[j]);
        const dx = b.x - a.x;
        const dy = b.y - a.y;
        const len = Math.sqrt(dx * dx + dy * dy) || 1;
        const nx = -dy / len;
        const ny = dx / len;
        for (let stroke = 0; stroke < order; stroke++) {
            const offset = (stroke - (order - 1) / 2) * BOND_GAP;
            svg.appendChild(svgEl("line", {
                x1: a.x + nx * offset,
                y1: a.y + ny * offset,
                x2: b.x + nx * offset,
                y2: b.y + ny * offset,
                stroke: "#666",
                "stroke-width": 1.6,
            }));
        }
    }
    graph.atoms.forEach((symbol, i) => {
        const p = scale(positions[i]);
        svg.appendChild(svgEl("circle", {
            cx: p.x,
            cy: p.y,
            r: 13,
            fill: ELEMENT_COLORS[symbol] ?? "#888",
        }));
        const label = svgEl("text", {
            x: p.x,
            y: p.y + 4.5,
            "text-anchor": "middle",
            "font-size": 12,
            "font-family": "sans-serif",
            fill: "#fff",
        });
        label.textContent = symbol;
        svg.appendChild(label);
    });
    container.appendChild(svg);
}
