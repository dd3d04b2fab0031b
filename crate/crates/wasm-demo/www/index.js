import init, { train, activation_curve, gradcheck, gradcheck_names } from "./pkg/tensorlite_wasm.js";

const $ = (id) => document.getElementById(id);

function num(id) {
  const v = $(id).value.trim();
  return v === "" ? undefined : Number(v);
}

// Plot one or more series on a canvas with shared axes.
function plot(canvas, xs, series, { logY = false } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const tf = logY ? (v) => Math.log10(Math.max(v, 1e-12)) : (v) => v;
  const all = series.flatMap((s) => s.values.map(tf));
  let lo = Math.min(...all), hi = Math.max(...all);
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => 30 + ((x - x0) / (x1 - x0 || 1)) * (w - 40);
  const py = (y) => h - 20 - ((tf(y) - lo) / (hi - lo)) * (h - 30);

  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  if (!logY && lo < 0 && hi > 0) { ctx.moveTo(30, py(0)); ctx.lineTo(w - 10, py(0)); }
  if (x0 < 0 && x1 > 0) { ctx.moveTo(px(0), 10); ctx.lineTo(px(0), h - 20); }
  ctx.stroke();

  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText((logY ? "1e" : "") + hi.toFixed(2), 2, 14);
  ctx.fillText((logY ? "1e" : "") + lo.toFixed(2), 2, h - 22);
  ctx.fillText(String(x0), 30, h - 5);
  ctx.fillText(String(x1), w - 40, h - 5);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(px(xs[i]), py(v)) : ctx.moveTo(px(xs[i]), py(v))));
    ctx.stroke();
  }
}

function drawField(canvas, t) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const n = t.grid_size, grid = t.grid();
  const cw = w / n, ch = h / n;
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      const p = grid[r * n + c];
      ctx.fillStyle = `rgb(${Math.round(255 * p)}, ${Math.round(120 + 60 * (1 - Math.abs(2 * p - 1)))}, ${Math.round(255 * (1 - p))})`;
      // Row 0 is the bottom of the data range.
      ctx.fillRect(c * cw, h - (r + 1) * ch, cw + 1, ch + 1);
    }
  }
  const pts = t.points(), labels = t.labels();
  const sx = (x) => ((x - t.lo) / (t.hi - t.lo)) * w;
  const sy = (y) => h - ((y - t.lo) / (t.hi - t.lo)) * h;
  for (let i = 0; i < labels.length; i++) {
    ctx.beginPath();
    ctx.arc(sx(pts[2 * i]), sy(pts[2 * i + 1]), labels.length > 10 ? 3 : 6, 0, 2 * Math.PI);
    ctx.fillStyle = labels[i] > 0.5 ? "#800" : "#008";
    ctx.strokeStyle = "#fff";
    ctx.fill();
    ctx.stroke();
  }
}

function runTraining() {
  const task = $("task").value;
  const started = performance.now();
  try {
    const t = train(task, num("seed") ?? 0, num("epochs") ?? 0, num("lr"), $("opt").value || undefined, 64);
    const losses = Array.from(t.losses());
    const ms = (performance.now() - started).toFixed(0);
    $("train-info").textContent =
      `final loss ${losses[losses.length - 1].toExponential(3)}, accuracy ${t.accuracy.toFixed(3)}, ${ms} ms`;
    drawField($("field"), t);
    plot($("loss"), losses.map((_, i) => i), [{ values: losses, color: "#06c" }], { logY: true });
    t.free();
  } catch (e) {
    $("train-info").textContent = String(e);
  }
}

function drawCurve() {
  const r = Number($("range").value);
  const c = activation_curve($("act").value, -r, r, 241);
  const xs = [], ys = [], ds = [];
  for (let i = 0; i < c.length; i += 3) { xs.push(c[i]); ys.push(c[i + 1]); ds.push(c[i + 2]); }
  plot($("curve"), xs, [{ values: ys, color: "#06c" }, { values: ds, color: "#c30" }]);
}

function runCheck() {
  const report = $("report");
  try {
    const text = gradcheck($("case").value || undefined, num("gseed") ?? 0, num("rtol") ?? 1e-2, num("atol") ?? 1e-3);
    report.textContent = text;
    report.className = text.endsWith("PASS") ? "" : "fail";
  } catch (e) {
    report.textContent = String(e);
    report.className = "fail";
  }
}

await init();
$("status").textContent = "ready";
for (const name of gradcheck_names().split("\n")) {
  $("case").add(new Option(name));
}
$("task").onchange = () => { $("epochs").value = $("task").value === "xor" ? 5000 : 200; };
$("train").onclick = runTraining;
$("act").onchange = drawCurve;
$("range").oninput = drawCurve;
$("check").onclick = runCheck;
drawCurve();
