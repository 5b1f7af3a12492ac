// Static demo page logic: read the controls, call into the wasm module,
// draw with plain canvas 2D. No framework, no build step beyond wasm-bindgen.

import init, {
  simulate_population,
  simulate_spectrum,
  simulate_dynamical,
} from "./pkg/fockpulse_wasm.js";

const canvas = document.getElementById("plot");
const ctx = canvas.getContext("2d");
const status = document.getElementById("status");

const state = {
  view: "population",
  shape: "rectangular",
  photons: 1,
  tp: 2.0,
  kind: "s_of_t",
  emitter: true,
};

const AXIS = "#68748a";
const GRID = "#e3e6ec";
const MPS = "#1859b3";
const ORACLE = "#d2691e";
const INPUT = "#7a7f8c";

function plotFrame(x0, y0, w, h) {
  ctx.strokeStyle = AXIS;
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, y0, w, h);
}

function niceTicks(lo, hi, n) {
  const span = hi - lo || 1;
  const step0 = span / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= n) || mag * 10;
  const ticks = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12; v += step) ticks.push(v);
  return ticks;
}

function drawLineChart(series, opts) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const m = { left: 62, right: 18, top: 24, bottom: 46 };
  const w = canvas.width - m.left - m.right;
  const h = canvas.height - m.top - m.bottom;
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  const xlo = Math.min(...xs), xhi = Math.max(...xs);
  let ylo = Math.min(0, ...ys), yhi = Math.max(...ys);
  const pad = 0.06 * (yhi - ylo || 1);
  yhi += pad; if (ylo < 0) ylo -= pad;
  const px = (x) => m.left + ((x - xlo) / (xhi - xlo)) * w;
  const py = (y) => m.top + (1 - (y - ylo) / (yhi - ylo)) * h;

  // shaded pulse window
  if (opts.pulseEnd && opts.shadeTo) {
    ctx.fillStyle = "rgba(90, 160, 220, 0.12)";
    ctx.fillRect(px(0), m.top, px(Math.min(opts.pulseEnd, xhi)) - px(0), h);
  }
  ctx.font = "12px sans-serif";
  for (const t of niceTicks(xlo, xhi, 8)) {
    ctx.strokeStyle = GRID;
    ctx.beginPath(); ctx.moveTo(px(t), m.top); ctx.lineTo(px(t), m.top + h); ctx.stroke();
    ctx.fillStyle = AXIS;
    ctx.textAlign = "center";
    ctx.fillText(t.toPrecision(3).replace(/\.?0+$/, ""), px(t), m.top + h + 16);
  }
  for (const t of niceTicks(ylo, yhi, 6)) {
    ctx.strokeStyle = GRID;
    ctx.beginPath(); ctx.moveTo(m.left, py(t)); ctx.lineTo(m.left + w, py(t)); ctx.stroke();
    ctx.fillStyle = AXIS;
    ctx.textAlign = "right";
    ctx.fillText(t.toPrecision(3).replace(/\.?0+$/, ""), m.left - 6, py(t) + 4);
  }
  plotFrame(m.left, m.top, w, h);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width || 1.8;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
    ctx.setLineDash([]);
  }

  ctx.textAlign = "center";
  ctx.fillStyle = "#1c2330";
  ctx.font = "13px sans-serif";
  ctx.fillText(opts.xlabel, m.left + w / 2, canvas.height - 10);
  ctx.save();
  ctx.translate(16, m.top + h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(opts.ylabel, 0, 0);
  ctx.restore();

  let lx = m.left + 14;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2.4;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath(); ctx.moveTo(lx, m.top + 12); ctx.lineTo(lx + 26, m.top + 12); ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#1c2330";
    ctx.textAlign = "left";
    ctx.fillText(s.label, lx + 32, m.top + 16);
    lx += 46 + ctx.measureText(s.label).width;
  }
}

// Diverging colormap: blue for negative, white at zero, red for positive.
function diverging(v, lo, hi) {
  const span = Math.max(hi, -lo, 1e-12);
  const x = Math.max(-1, Math.min(1, v / span));
  const ramp = (a, b, t) => Math.round(a + (b - a) * t);
  if (x < 0) {
    const t = -x;
    return `rgb(${ramp(255, 33, t)},${ramp(255, 102, t)},${ramp(255, 172, t)})`;
  }
  const t = x;
  return `rgb(${ramp(255, 178, t)},${ramp(255, 34, t)},${ramp(255, 34, t)})`;
}

function drawHeatmap(data) {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const m = { left: 62, right: 150, top: 24, bottom: 46 };
  const w = canvas.width - m.left - m.right;
  const h = canvas.height - m.top - m.bottom;
  const nt = data.times.length, nw = data.omega.length;
  const cw = w / nt, ch = h / nw;
  for (let wi = 0; wi < nw; wi++) {
    for (let ti = 0; ti < nt; ti++) {
      ctx.fillStyle = diverging(data.values[wi][ti], data.min, data.max);
      // ω increases upward
      ctx.fillRect(m.left + ti * cw, m.top + (nw - 1 - wi) * ch, cw + 0.75, ch + 0.75);
    }
  }
  plotFrame(m.left, m.top, w, h);
  ctx.font = "12px sans-serif";
  ctx.fillStyle = AXIS;
  const tlo = data.times[0], thi = data.times[nt - 1];
  for (const t of niceTicks(tlo, thi, 8)) {
    const x = m.left + ((t - tlo) / (thi - tlo)) * w;
    ctx.textAlign = "center";
    ctx.fillText(t.toPrecision(3).replace(/\.?0+$/, ""), x, m.top + h + 16);
  }
  const wlo = data.omega[0], whi = data.omega[nw - 1];
  for (const t of niceTicks(wlo, whi, 6)) {
    const y = m.top + (1 - (t - wlo) / (whi - wlo)) * h;
    ctx.textAlign = "right";
    ctx.fillText(t.toPrecision(3).replace(/\.?0+$/, ""), m.left - 6, y + 4);
  }
  ctx.fillStyle = "#1c2330";
  ctx.font = "13px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText("t (units of 1/γ)", m.left + w / 2, canvas.height - 10);
  ctx.save();
  ctx.translate(16, m.top + h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText("(ω − ω_p)/γ", 0, 0);
  ctx.restore();

  // colorbar
  const cbx = m.left + w + 18, cbw = 16;
  for (let i = 0; i < h; i++) {
    const v = data.max - (i / h) * (data.max - Math.min(data.min, 0));
    ctx.fillStyle = diverging(v, data.min, data.max);
    ctx.fillRect(cbx, m.top + i, cbw, 1.5);
  }
  ctx.strokeStyle = AXIS;
  ctx.strokeRect(cbx, m.top, cbw, h);
  ctx.fillStyle = AXIS;
  ctx.font = "11px sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(data.max.toPrecision(3), cbx + cbw + 4, m.top + 8);
  ctx.fillText(Math.min(data.min, 0).toPrecision(3), cbx + cbw + 4, m.top + h);
  ctx.fillText("0", cbx + cbw + 4, m.top + (data.max / (data.max - Math.min(data.min, 0))) * h + 4);

  // stationary spectrum alongside, rotated to the ω axis
  const sx = cbx + 56;
  const smax = Math.max(...data.stationary);
  ctx.strokeStyle = "#1d7a3a";
  ctx.lineWidth = 1.6;
  ctx.beginPath();
  data.stationary.forEach((v, wi) => {
    const y = m.top + (nw - 1 - wi + 0.5) * ch;
    const x = sx + (v / smax) * 70;
    wi ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#1d7a3a";
  ctx.fillText("S(ω)", sx + 20, m.top - 8);
}

function busy(msg) {
  status.classList.remove("error");
  status.textContent = msg;
}

function fail(err) {
  status.classList.add("error");
  status.textContent = `error: ${err}`;
}

let pending = null;
function render() {
  // Collapse bursts of slider events into one wasm call per frame.
  if (pending) return;
  busy("computing …");
  pending = requestAnimationFrame(() => {
    pending = null;
    const t0 = performance.now();
    try {
      if (state.view === "population") {
        const d = JSON.parse(simulate_population(state.shape, state.photons, state.tp));
        const series = [
          { x: d.t, y: d.mps, color: MPS, label: "tensor network" },
          { x: d.flux_t, y: d.flux, color: "#b3261e", label: "output flux n_R", dash: [6, 4], width: 1.4 },
        ];
        if (d.analytic) {
          series.splice(1, 0, {
            x: d.t, y: d.analytic, color: ORACLE,
            label: d.oracle === "ClosedForm" ? "closed form" : "sector ODE",
            dash: [2, 4], width: 2.4,
          });
        }
        drawLineChart(series, {
          xlabel: "t (units of 1/γ)",
          ylabel: "emitter population / flux",
          pulseEnd: d.pulse_end,
          shadeTo: true,
        });
        busy(`max bond dimension ${d.max_bond_dim}, ${(performance.now() - t0).toFixed(0)} ms`);
      } else if (state.view === "spectrum") {
        const d = JSON.parse(simulate_spectrum(state.shape, state.photons, state.tp));
        drawLineChart(
          [
            { x: d.omega, y: d.s, color: MPS, label: "transmitted S(ω)" },
            { x: d.omega, y: d.input, color: INPUT, label: `input ${d.photon_number}·|f(ω)|²`, dash: [5, 4] },
          ],
          { xlabel: "(ω − ω_p)/γ", ylabel: "S(ω)" }
        );
        busy(`${(performance.now() - t0).toFixed(0)} ms — 1-photon transmission reproduces the input exactly; 2 photons grow a γ-wide central feature`);
      } else {
        const d = JSON.parse(
          simulate_dynamical(state.shape, state.photons, state.tp, state.kind, state.emitter)
        );
        drawHeatmap(d);
        const neg = d.min < 0 ? `, min ${d.min.toPrecision(3)} (negative values are real features of the definition)` : "";
        busy(`${(performance.now() - t0).toFixed(0)} ms${neg}`);
      }
    } catch (err) {
      fail(err);
    }
  });
}

function bind() {
  document.querySelectorAll("button.view").forEach((btn) => {
    btn.addEventListener("click", () => {
      document.querySelectorAll("button.view").forEach((b) => b.classList.remove("active"));
      btn.classList.add("active");
      state.view = btn.dataset.view;
      document.body.dataset.view = state.view;
      render();
    });
  });
  document.querySelectorAll("input[name=shape]").forEach((el) =>
    el.addEventListener("change", () => { state.shape = el.value; render(); })
  );
  document.querySelectorAll("input[name=photons]").forEach((el) =>
    el.addEventListener("change", () => { state.photons = parseInt(el.value, 10); render(); })
  );
  document.querySelectorAll("input[name=kind]").forEach((el) =>
    el.addEventListener("change", () => { state.kind = el.value; render(); })
  );
  document.getElementById("emitter").addEventListener("change", (e) => {
    state.emitter = e.target.checked;
    render();
  });
  const tp = document.getElementById("tp");
  tp.addEventListener("input", () => {
    state.tp = parseFloat(tp.value);
    document.getElementById("tp-value").textContent = state.tp.toFixed(2);
    render();
  });
}

init().then(() => {
  bind();
  render();
}).catch(fail);
