import init, { sleep_estimate, sensing_curves, compare_modes } from "./pkg/cusf_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLOURS = ["#1f77b4", "#d62728", "#2ca02c"];

function plot(canvas, series, xlabel, ylabel) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.points);
  if (pts.length === 0) return;
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) y1 = y0 + 1;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(xlabel, w / 2 - 20, h - 8);
  ctx.fillText(ylabel, 4, 14);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLOURS[i % COLOURS.length];
    ctx.beginPath();
    s.points.forEach(([x, y], k) => (k ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    if (s.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(s.label, w - pad - 110, pad + 14 + 14 * i);
    }
  });
}

function estimate() {
  const r = JSON.parse(sleep_estimate($("bits").value));
  if (r.error) {
    $("bits-out").textContent = r.error;
    return;
  }
  const rows = r.runs.map((g) => `  i=${g.i}  G=${g.g}  G^s=${g.g_s}  Pr=${g.pr.toFixed(4)}`);
  $("bits-out").textContent = [
    `busy runs NP=${r.np}, busy slots N1=${r.n1}, run lengths ${r.n_min}..${r.n_max}`,
    `Pr(NZ) = ${r.pr_nz === null ? "-" : r.pr_nz.toFixed(4)}`,
    ...rows,
    `sleep for n_s = ${r.n_s} slots`,
  ].join("\n");
}

function curves() {
  const r = JSON.parse(sensing_curves(num("snr"), num("pf"), num("fs"), num("taumax")));
  $("curves-err").textContent = r.error || "";
  if (r.error) return;
  plot($("tau-plot"), [{ points: r.tau_for_pd.map(([pd, t]) => [pd, t * 1e3]) }], "target Pd", "tau (ms)");
  plot($("pd-plot"), [{ points: r.pd_for_tau.map(([t, pd]) => [t * 1e3, pd]) }], "tau (ms)", "Pd");
}

function compare() {
  const r = JSON.parse(compare_modes(num("rounds"), num("seed")));
  if (r.error) {
    $("cmp-out").textContent = r.error;
    return;
  }
  plot(
    $("cmp-plot"),
    r.modes.map((m) => ({ label: m.mode, points: m.residual_j.map((e, i) => [i + 1, e]) })),
    "round",
    "residual energy (J)",
  );
  $("cmp-out").textContent = r.modes
    .map((m) => {
      const d = m.mean_delay_s === null ? "-" : (m.mean_delay_s * 1e3).toFixed(1);
      return `${m.mode.padEnd(13)} energy ${m.total_energy_j.toFixed(3)} J  setup ${(m.setup_share * 100).toFixed(1)}%  delay ${d} ms`;
    })
    .join("\n");
}

await init();
$("bits-go").onclick = estimate;
$("curves-go").onclick = curves;
$("cmp-go").onclick = compare;
estimate();
curves();
