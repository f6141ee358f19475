/** Designer page wiring: per-property sliders drive live decodes; the
 * molecule, computed-vs-predicted readouts, and the curve markers update on
 * every response. */
import { ApiClient } from "./api.js";
import { evalPoly, sampleCurve } from "./curves.js";
import { renderMolecule } from "./render.js";
import { DesignerState, SLIDER_RANGE } from "./state.js";
const CURVE_W = 220;
const CURVE_H = 90;
function el(tag, className, text) {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text !== undefined)
        node.textContent = text;
    return node;
}
function curveSvg(head, marker) {
    const points = sampleCurve(head.coefficients, SLIDER_RANGE[0], SLIDER_RANGE[1], 101);
    const ys = points.map((p) => p.y);
    const lo = Math.min(...ys);
    const hi = Math.max(...ys);
    const span = hi - lo || 1;
    const px = (z) => ((z - SLIDER_RANGE[0]) / (SLIDER_RANGE[1] - SLIDER_RANGE[0])) * CURVE_W;
    const py = (y) => CURVE_H - 8 - ((y - lo) / span) * (CURVE_H - 16);
    const path = points
        .map((p, k) => `${k === 0 ? "M" : "L"}${px(p.z).toFixed(1)},${py(p.y).toFixed(1)}`)
        .join(" ");
    const my = py(evalPoly(head.coefficients, marker));
    return (`<svg viewBox="0 0 ${CURVE_W} ${CURVE_H}" width="${CURVE_W}" height="${CURVE_H}">` +
        `<path d="${path}" fill="none" stroke="#2f6fde" stroke-width="1.5"/>` +
        `<circle cx="${px(marker).toFixed(1)}" cy="${my.toFixed(1)}" r="4" fill="#d43f3f"/>` +
        `</svg>`);
}
async function boot() {
    const root = document.getElementById("app");
    if (!root)
        throw new Error("missing #app container");
    const params = new URLSearchParams(window.location.search);
    const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";
    const sessionSeed = Number(params.get("seed") ?? Math.floor(Math.random() * 2 ** 31));
    const api = new ApiClient(baseUrl);
    let info;
    try {
        info = await api.modelInfo();
    }
    catch (err) {
        root.appendChild(el("div", "schema-error", `cannot reach service at ${baseUrl}: ${err}`));
        return;
    }
    const header = el("div", "header");
    header.appendChild(el("h1", undefined, "latent molecule designer"));
    header.appendChild(el("p", "meta", `alphabet ${info.atom_alphabet.join(" ")} | latent dim ${info.latent_dim} | seed ${sessionSeed}`));
    root.appendChild(header);
    const main = el("div", "columns");
    const moleculePane = el("div", "molecule-pane");
    const moleculeBox = el("div", "molecule-box");
    const smilesLine = el("div", "smiles", "...");
    const staleBadge = el("span", "stale hidden", "stale - retrying");
    moleculePane.append(moleculeBox, smilesLine, staleBadge);
    const controlPane = el("div", "control-pane");
    main.append(moleculePane, controlPane);
    root.appendChild(main);
    const readouts = new Map();
    const seedResp = await api.seed({ seed: sessionSeed });
    const state = new DesignerState(info.targeted.map((t) => t.dim), (overrides) => api.decode(seedResp.session, overrides), (snapshot) => display(snapshot));
    state.attachSession(seedResp.session, sessionSeed);
    for (const head of info.targeted) {
        const row = el("div", "control-row");
        row.appendChild(el("div", "prop-name", `z${head.dim} -> ${head.property}`));
        const slider = document.createElement("input");
        slider.type = "range";
        slider.min = String(SLIDER_RANGE[0]);
        slider.max = String(SLIDER_RANGE[1]);
        slider.step = "0.01";
        slider.value = String(params.get(`z${head.dim}`) ?? "0");
        const valueLabel = el("span", "slider-value", slider.value);
        slider.addEventListener("input", () => {
            valueLabel.textContent = slider.value;
            state.onSliderChange(head.dim, Number(slider.value));
        });
        const curve = el("div", "curve");
        curve.innerHTML = curveSvg(head, Number(slider.value));
        const predicted = el("div", "readout", "predicted: -");
        const computed = el("div", "readout", "computed: -");
        row.append(slider, valueLabel, curve, predicted, computed);
        controlPane.appendChild(row);
        readouts.set(head.property, { predicted, computed, curve, slider, value: valueLabel });
        const preset = Number(slider.value);
        if (preset !== 0)
            state.onSliderChange(head.dim, preset);
    }
    function display(snapshot) {
        staleBadge.classList.toggle("hidden", !snapshot.stale);
        if (state.lastResponse) {
            renderMolecule(moleculeBox, state.lastResponse.graph, 7);
            smilesLine.textContent = state.lastResponse.smiles;
        }
        for (const head of info.targeted) {
            const widgets = readouts.get(head.property);
            if (!widgets)
                continue;
            const predicted = snapshot.predicted[head.property];
            if (predicted !== undefined) {
                // the displayed value is the service response field verbatim
                widgets.predicted.textContent = `predicted (normalized): ${predicted}`;
            }
            const computed = snapshot.computed[head.property];
            if (computed !== undefined) {
                widgets.computed.textContent = `computed (raw units): ${computed}`;
            }
            widgets.curve.innerHTML = curveSvg(head, snapshot.sliders[head.dim] ?? 0);
        }
    }
    void state.flush(); // initial molecule
}
void boot();
