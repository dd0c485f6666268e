import init, { noise_heatmap, partition_curve, run_config } from "./pkg/qsc_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(el, err) {
  el.textContent = err ? String(err) : "";
  el.className = err ? "err" : "";
}

let heatmap = null;

function drawHeatmap() {
  if (!heatmap) return;
  const field = $("hm-field").value;
  const grid = heatmap[field];
  const canvas = $("hm-canvas");
  const ctx = canvas.getContext("2d");
  const k = grid.length;
  const cell = canvas.width / k;
  const flat = grid.flat();
  const lo = Math.min(...flat), hi = Math.max(...flat);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "11px sans-serif";
  grid.forEach((row, a) => row.forEach((v, b) => {
    const t = hi > lo ? (v - lo) / (hi - lo) : 1;
    ctx.fillStyle = `hsl(${240 - 240 * t}, 70%, 55%)`;
    // leak grows downward, meas to the right
    ctx.fillRect(b * cell, a * cell, cell, cell);
    ctx.fillStyle = "#000";
    ctx.fillText(v.toFixed(4), b * cell + 4, a * cell + cell / 2);
    if (field === "step2" && !heatmap.nine_of_ten[a][b]) {
      ctx.strokeRect(b * cell + 1, a * cell + 1, cell - 2, cell - 2);
    }
  }));
}

function drawCurve(points) {
  const canvas = $("pc-canvas");
  const ctx = canvas.getContext("2d");
  const pad = 30, w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  const xmax = points[points.length - 1].leak;
  const ymin = Math.min(0.5, ...points.map((p) => p.worst_case));
  const x = (v) => pad + (w * v) / xmax;
  const y = (v) => pad + h * (1 - (v - ymin) / (1 - ymin));
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#000";
  ctx.fillText("1", 8, pad + 4);
  ctx.fillText(ymin.toFixed(2), 2, pad + h);
  ctx.fillText("leak " + xmax.toFixed(2), pad + w - 50, pad + h + 18);
  for (const [key, colour] of [["worst_case", "#c33"], ["mean", "#36c"]]) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    points.forEach((p, i) => (i ? ctx.lineTo : ctx.moveTo).call(ctx, x(p.leak), y(p[key])));
    ctx.stroke();
  }
}

async function main() {
  await init();

  $("hm-run").onclick = () => {
    try {
      heatmap = JSON.parse(noise_heatmap(num("hm-n"), num("hm-steps"), num("hm-max")));
      report($("hm-msg"));
      drawHeatmap();
    } catch (e) {
      report($("hm-msg"), e);
    }
  };
  $("hm-field").onchange = drawHeatmap;

  $("pc-run").onclick = () => {
    const leaks = Float64Array.from({ length: 21 }, (_, k) => (0.6 * k) / 20);
    try {
      drawCurve(JSON.parse(partition_curve(num("pc-n"), num("pc-j1"), num("pc-j2"), leaks)));
      report($("pc-msg"));
    } catch (e) {
      report($("pc-msg"), e);
    }
  };

  $("cfg-run").onclick = () => {
    try {
      const r = JSON.parse(run_config($("cfg-text").value));
      $("cfg-out").textContent = JSON.stringify(
        { passed: r.passed, aggregates: r.aggregates, assertions: r.assertions, runs: r.runs },
        null,
        2,
      );
      report($("cfg-msg"));
    } catch (e) {
      report($("cfg-msg"), e);
    }
  };
}

main();
