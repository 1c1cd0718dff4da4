import init, { werner_sweep, estimate_werner, random_state_paths } from "./pkg/entlab_wasm.js";

const $ = (id) => document.getElementById(id);
const fmt = (x, d = 6) => Number(x).toPrecision(d);

function call(out, f) {
  try {
    return JSON.parse(f());
  } catch (e) {
    out.innerHTML = `<p class="err">${e.message ?? e}</p>`;
    return null;
  }
}

function table(head, rows) {
  const th = head.map((h) => `<th>${h}</th>`).join("");
  const tr = rows.map((r) => `<tr>${r.map((c) => `<td>${c}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${th}</tr>${tr}</table>`;
}

const SERIES = [
  ["concurrence_oracle", "C (oracle)", "#1f77b4", 1],
  ["concurrence_moments", "C (moments)", "#ff7f0e", 2],
  ["negativity", "negativity", "#2ca02c", 1],
  ["ccnr_trace_norm", "‖R(ρ)‖₁ − 1", "#d62728", 1],
];

function plotSweep(points) {
  const c = $("sweep-canvas");
  const g = c.getContext("2d");
  const [w, h, pad] = [c.width, c.height, 36];
  g.clearRect(0, 0, w, h);
  const x = (p) => pad + p * (w - 2 * pad);
  const y = (v) => h - pad - v * (h - 2 * pad);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  g.fillStyle = "#444";
  g.font = "12px sans-serif";
  for (const t of [0, 0.25, 0.5, 0.75, 1]) {
    g.fillText(t.toFixed(2), x(t) - 10, h - pad + 16);
    g.fillText(t.toFixed(2), 4, y(t) + 4);
  }
  g.fillText("p", w - pad + 8, h - pad + 4);
  g.setLineDash([4, 4]);
  g.beginPath();
  g.moveTo(x(1 / 3), pad);
  g.lineTo(x(1 / 3), h - pad);
  g.stroke();
  g.setLineDash([]);
  for (const [key, , color, width] of SERIES) {
    g.strokeStyle = color;
    g.lineWidth = width;
    g.beginPath();
    points.forEach((pt, i) => {
      const v = key === "ccnr_trace_norm" ? Math.max(0, pt[key] - 1) : pt[key];
      i ? g.lineTo(x(pt.p), y(v)) : g.moveTo(x(pt.p), y(v));
    });
    g.stroke();
  }
  g.lineWidth = 1;
  $("sweep-legend").innerHTML = SERIES.map(([, name, color]) => `<span style="color:${color}">■ ${name}</span>`).join("");
}

function runSweep() {
  const out = $("sweep-out");
  const pts = call(out, () => werner_sweep(Number($("sweep-points").value)));
  if (!pts) return;
  plotSweep(pts);
  const worst = Math.max(...pts.map((p) => Math.abs(p.concurrence_moments - p.concurrence_oracle)));
  out.innerHTML = `<p>max |C(moments) − C(oracle)| = ${fmt(worst, 3)}; entanglement sets in at p = 1/3 (dashed).</p>`;
}

function plotInterval(e) {
  const c = $("est-canvas");
  const g = c.getContext("2d");
  const [w, h, pad] = [c.width, c.height, 30];
  g.clearRect(0, 0, w, h);
  const x = (v) => pad + Math.min(1.05, Math.max(0, v)) / 1.05 * (w - 2 * pad);
  g.strokeStyle = "#999";
  g.beginPath();
  g.moveTo(pad, h / 2);
  g.lineTo(w - pad, h / 2);
  g.stroke();
  g.fillStyle = "#444";
  g.font = "12px sans-serif";
  for (const t of [0, 0.25, 0.5, 0.75, 1]) g.fillText(t.toFixed(2), x(t) - 10, h - 8);
  g.fillStyle = "rgba(31,119,180,0.25)";
  g.fillRect(x(e.ci_low), h / 2 - 14, x(e.ci_high) - x(e.ci_low), 28);
  g.fillStyle = "#1f77b4";
  g.fillRect(x(e.c_hat) - 2, h / 2 - 18, 4, 36);
  g.fillStyle = "#d62728";
  g.fillRect(x(e.exact) - 1, h / 2 - 24, 2, 48);
}

function runEstimate() {
  const out = $("est-out");
  out.innerHTML = "<p>sampling…</p>";
  setTimeout(() => {
    const e = call(out, () =>
      estimate_werner(Number($("est-p").value), Number($("est-shots").value), Number($("est-seed").value), Number($("est-rounds").value)),
    );
    if (!e) return;
    plotInterval(e);
    const moments = e.moments.map((m, k) => [`m${k + 1}`, fmt(m), fmt(e.moment_std[k], 3), fmt(e.exact_moments[k])]);
    const freqs = e.frequencies.map(([id, f, p]) => [id, fmt(f), fmt(p)]);
    out.innerHTML =
      `<p>Ĉ = ${fmt(e.c_hat)} (blue), 95% interval [${fmt(e.ci_low)}, ${fmt(e.ci_high)}] (shaded), exact C = ${fmt(e.exact)} (red); ` +
      `fit rank ${e.fit_rank}; ${e.bootstrap_inconsistent}/${e.bootstrap_rounds} bootstrap replicates had no real spectrum.</p>` +
      table(["", "sampled", "std", "exact"], moments) +
      "<p></p>" +
      table(["setting", "frequency", "probability"], freqs);
  }, 10);
}

function runRandom() {
  const out = $("rs-out");
  const s = call(out, () => random_state_paths(Number($("rs-seed").value), Number($("rs-rank").value)));
  if (!s) return;
  const rows = s.spectral.map((m, k) => [`m${k + 1}`, fmt(m, 12), fmt(s.permutation[k], 12), fmt(s.projective[k], 12), fmt(s.max_gap[k], 2)]);
  out.innerHTML =
    table(["", "spectral", "permutation", "projective", "max gap"], rows) +
    `<p>eigenvalues of ρρ̃: ${s.mu.map((m) => fmt(m, 5)).join(", ")}<br>` +
    `C (oracle) = ${fmt(s.concurrence_oracle, 10)}, C (moments) = ${fmt(s.concurrence_moments, 10)}</p>`;
}

await init();
$("sweep-run").onclick = runSweep;
$("est-run").onclick = runEstimate;
$("rs-run").onclick = runRandom;
runSweep();
runRandom();
