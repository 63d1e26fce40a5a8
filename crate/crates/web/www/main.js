import init, { ov_curve, neutral_line, headway_run } from "./pkg/platoon_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// Plots series of [x, y] points (NaN y breaks the line) with simple axes.
function plot(canvas, series, { xlabel, ylabel, ymin, ymax }) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, B = 30, T = 10, R = 10;
  ctx.clearRect(0, 0, W, H);
  const pts = series.flatMap((s) => s.points).filter((p) => Number.isFinite(p[1]));
  if (!pts.length) return;
  const x0 = Math.min(...pts.map((p) => p[0])), x1 = Math.max(...pts.map((p) => p[0]));
  const y0 = ymin ?? Math.min(...pts.map((p) => p[1]));
  const y1 = ymax ?? Math.max(...pts.map((p) => p[1]));
  const sx = (x) => L + ((x - x0) / (x1 - x0 || 1)) * (W - L - R);
  const sy = (y) => H - B - ((y - y0) / (y1 - y0 || 1)) * (H - B - T);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(L, T, W - L - R, H - B - T);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const x = x0 + ((x1 - x0) * i) / 4, y = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(x.toPrecision(3), sx(x) - 10, H - B + 14);
    ctx.fillText(y.toPrecision(3), 4, sy(y) + 4);
  }
  ctx.fillText(xlabel, W / 2, H - 4);
  ctx.save();
  ctx.translate(12, H / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  series.forEach((s, i) => {
    ctx.strokeStyle = s.color ?? `hsl(${(i * 47) % 360} 70% 40%)`;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (!Number.isFinite(y)) { pen = false; continue; }
      const cy = sy(Math.min(Math.max(y, y0), y1));
      pen ? ctx.lineTo(sx(x), cy) : ctx.moveTo(sx(x), cy);
      pen = true;
    }
    ctx.stroke();
    if (s.label) {
      ctx.fillStyle = ctx.strokeStyle;
      ctx.fillText(s.label, W - R - 90, T + 14 + 14 * i);
    }
  });
}

function chunks(flat, width) {
  const out = [];
  for (let i = 0; i < flat.length; i += width) out.push(Array.from(flat.slice(i, i + width)));
  return out;
}

function drawOv() {
  try {
    const rows = chunks(ov_curve(num("ov-hs"), num("ov-hf"), num("ov-vf"), 60, 240), 4);
    $("ov-msg").textContent = "";
    plot($("ov-v"), [{ points: rows.map((r) => [r[0], r[1]]) }], { xlabel: "headway (m)", ylabel: "V (m/s)", ymin: 0 });
    plot($("ov-fd"), [{ points: rows.map((r) => [r[2], r[3]]) }], { xlabel: "density (1/m)", ylabel: "flow (1/s)", ymin: 0 });
  } catch (e) {
    $("ov-msg").textContent = e.message ?? e;
  }
}

function drawNeutral() {
  try {
    const delays = $("nl-td").value.split(",").map(Number);
    const series = delays.map((td) => ({
      label: `t_d = ${td} s`,
      points: chunks(neutral_line($("nl-model").value, num("nl-n"), num("nl-p"), td, 301), 2),
    }));
    $("nl-msg").textContent = "";
    plot($("nl"), series, { xlabel: "headway (m)", ylabel: "a* (1/s)", ymin: 0 });
  } catch (e) {
    $("nl-msg").textContent = e.message ?? e;
  }
}

function runSim() {
  $("sim-msg").textContent = "running…";
  // let the message paint before the blocking run
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const run = headway_run($("sim-model").value, num("sim-n"), num("sim-a"), num("sim-p"), num("sim-td"),
        BigInt(num("sim-seed")), num("sim-T"), 6);
      const times = run.times, h = run.headways, n = times.length;
      const series = [];
      for (let v = 0; v < run.vehicles; v++) {
        series.push({ points: Array.from(times, (t, k) => [t, h[v * n + k]]) });
      }
      plot($("sim"), series, { xlabel: "time (s)", ylabel: "headway (m)" });
      const settled = Number.isNaN(run.stabilized_at) ? "did not settle" : `settled at ${run.stabilized_at.toFixed(1)} s`;
      const verdict = run.oracle_max_real < 0 ? "linearly stable" : "linearly unstable";
      $("sim-msg").textContent = `${settled}; ${verdict} (max Re λ = ${run.oracle_max_real.toExponential(2)}); `
        + `${((performance.now() - t0) / 1000).toFixed(1)} s`;
      run.free();
    } catch (e) {
      $("sim-msg").textContent = e.message ?? e;
    }
  }, 20);
}

await init();
for (const id of ["ov-hs", "ov-hf", "ov-vf"]) $(id).addEventListener("input", drawOv);
for (const id of ["nl-model", "nl-n", "nl-p", "nl-td"]) $(id).addEventListener("input", drawNeutral);
$("sim-run").addEventListener("click", runSim);
drawOv();
drawNeutral();
runSim();
