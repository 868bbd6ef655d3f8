import init, { lassoPath, criticalCurve, selectionMc } from "./pkg/hdforecast_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];
const num = (id) => Number(document.getElementById(id).value);

function frame(ctx, xs, ys, xlabel) {
  const { width: w, height: h } = ctx.canvas;
  const pad = 40;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(xlabel, w / 2 - 20, h - 10);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  return { sx, sy };
}

function line(ctx, xs, ys, sx, sy, color, width = 1) {
  ctx.strokeStyle = color;
  ctx.lineWidth = width;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function guard(outId, f) {
  const out = document.getElementById(outId);
  try {
    out.className = "";
    f(out);
  } catch (e) {
    out.className = "err";
    out.textContent = String(e);
  }
}

function runLasso() {
  guard("l-out", (out) => {
    const d = JSON.parse(lassoPath(num("l-seed"), num("l-t"), num("l-k"), num("l-s"), num("l-load"), num("l-folds")));
    const ctx = document.getElementById("l-canvas").getContext("2d");
    const xs = d.lambdas.map(Math.log10);
    const all = d.paths.flat();
    const { sx, sy } = frame(ctx, xs, all, "log10 lambda");
    d.paths.forEach((p, j) => line(ctx, xs, p, sx, sy, d.signals.includes(j) ? COLORS[j % COLORS.length] : "#bbb"));
    ctx.strokeStyle = "#000";
    ctx.setLineDash([4, 4]);
    const xl = sx(Math.log10(d.lambda_cv));
    ctx.beginPath();
    ctx.moveTo(xl, 40);
    ctx.lineTo(xl, ctx.canvas.height - 40);
    ctx.stroke();
    ctx.setLineDash([]);
    out.textContent =
      `lambda (mean of fold minima) = ${d.lambda_cv.toPrecision(4)}\n` +
      `selected: [${d.selected.join(", ")}]   true signals: [${d.signals.join(", ")}]`;
  });
}

function runCritical() {
  guard("c-out", (out) => {
    const d = JSON.parse(criticalCurve(num("c-p"), num("c-delta"), num("c-k")));
    const ctx = document.getElementById("c-canvas").getContext("2d");
    const { sx, sy } = frame(ctx, d.k, d.values.flat(), "K");
    d.values.forEach((v, i) => line(ctx, d.k, v, sx, sy, COLORS[i], 2));
    const at = Math.min(52, d.k.length) - 1;
    out.textContent = d.delta.map((dl, i) => `delta=${dl}: c(${d.k[at]}) = ${d.values[i][at].toFixed(4)}`).join("\n");
  });
}

function runMc() {
  guard("m-out", (out) => {
    out.textContent = "running...";
    const rows = JSON.parse(
      selectionMc(num("m-seed"), num("m-reps"), num("m-t"), num("m-k"), num("m-s"), num("m-load"),
        document.getElementById("m-lasso").checked),
    );
    const ctx = document.getElementById("m-canvas").getContext("2d");
    const { width: w, height: h } = ctx.canvas;
    ctx.clearRect(0, 0, w, h);
    const bw = (w - 80) / (rows.length * 3);
    rows.forEach((r, i) => {
      [r.tpr ?? 0, r.fpr, r.fwer].forEach((v, j) => {
        const x = 40 + (i * 3 + j) * bw;
        ctx.fillStyle = COLORS[j];
        ctx.fillRect(x + 2, h - 30 - v * (h - 60), bw - 4, v * (h - 60));
      });
      ctx.fillStyle = "#333";
      ctx.fillText(r.method, 40 + i * 3 * bw + bw, h - 10);
    });
    out.textContent =
      "method   TPR      FPR      FWER\n" +
      rows
        .map((r) => `${r.method.padEnd(8)} ${(r.tpr ?? NaN).toFixed(4)}   ${r.fpr.toFixed(4)}   ${r.fwer.toFixed(4)}`)
        .join("\n");
  });
}

await init();
document.getElementById("l-run").onclick = runLasso;
document.getElementById("c-run").onclick = runCritical;
document.getElementById("m-run").onclick = () => setTimeout(runMc, 0);
runCritical();
runLasso();
