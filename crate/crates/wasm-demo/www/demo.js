import init, { lemma1_example, comparison_curves, omp_demo, sharpness } from "./pkg/omplab_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v) => (v === null ? "undefined" : v.toFixed(6));

function call(f, ...args) {
  try {
    return [JSON.parse(f(...args)), null];
  } catch (e) {
    return [null, String(e)];
  }
}

function showLemma1() {
  const delta = num("l1-delta");
  $("l1-value").textContent = delta.toFixed(2);
  const [v, err] = call(lemma1_example, delta);
  if (err) { $("l1-out").textContent = err; return; }
  $("l1-out").textContent =
    `A = diag(${v.diag.map((d) => d.toFixed(4)).join(", ")})\n` +
    `exact delta_3 = ${fmt(v.ric)}\n` +
    `lhs = ${fmt(v.lhs)}   rhs = ${fmt(v.rhs)}   margin = ${fmt(v.margin)}\n` +
    `OMP picks ${JSON.stringify(v.selected)} in two iterations`;
}

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad); ctx.lineTo(pad, h - pad); ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function showCurves() {
  const [c, err] = call(comparison_curves, num("cc-k"), num("cc-eps"), 200);
  const canvas = $("cc-plot");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  axes(ctx, w, h, pad);
  if (err) { ctx.fillText(err, pad + 5, pad + 15); return; }
  // clip the y range so the blow-up near the bound stays readable
  const finite = c.sharp_min_mag.filter((v) => v !== null);
  const ymax = Math.max(1e-9, (finite[Math.floor(finite.length * 0.9)] || 1) * 1.2);
  const X = (d) => pad + (d / c.sharp_ric_bound) * (w - 2 * pad);
  const Y = (v) => h - pad - Math.min(v / ymax, 1) * (h - 2 * pad);
  const line = (ys, dash, color) => {
    ctx.setLineDash(dash);
    ctx.strokeStyle = color;
    ctx.beginPath();
    let pen = false;
    c.delta.forEach((d, i) => {
      if (ys[i] === null) { pen = false; return; }
      pen ? ctx.lineTo(X(d), Y(ys[i])) : ctx.moveTo(X(d), Y(ys[i]));
      pen = true;
    });
    ctx.stroke();
  };
  line(c.sharp_min_mag, [], "#1b5fad");
  line(c.chang_wu_min_mag, [6, 4], "#c0392b");
  ctx.setLineDash([]);
  ctx.fillStyle = "#333";
  ctx.fillText("0", pad - 4, h - pad + 14);
  ctx.fillText(`delta -> 1/sqrt(K+1) = ${c.sharp_ric_bound.toFixed(4)}`, w - pad - 190, h - pad + 14);
  ctx.fillText(`${ymax.toPrecision(3)}`, 4, pad + 4);
  ctx.fillText(`earlier RIC bound ${c.chang_wu_ric_bound.toFixed(4)}`, pad + 10, pad + 12);
}

function showOmp() {
  const [v, err] = call(omp_demo, num("om-m"), num("om-n"), num("om-k"), num("om-eps"), num("om-seed"));
  const canvas = $("om-plot");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  if (err) { $("om-out").textContent = err; return; }
  const mid = h / 2;
  const scale = Math.max(...v.x.map(Math.abs), ...v.estimate.map(Math.abs), 1e-9);
  const step = w / v.n;
  ctx.strokeStyle = "#999";
  ctx.beginPath(); ctx.moveTo(0, mid); ctx.lineTo(w, mid); ctx.stroke();
  v.x.forEach((xi, i) => {
    ctx.fillStyle = "#bbb";
    ctx.fillRect(i * step + 2, mid, step / 2 - 2, -(xi / scale) * (mid - 10));
    ctx.fillStyle = v.truth.includes(i) === v.recovered.includes(i) ? "#1b5fad" : "#c0392b";
    ctx.fillRect(i * step + step / 2, mid, step / 2 - 2, -(v.estimate[i] / scale) * (mid - 10));
  });
  const rows = v.trace.map((r) =>
    `  k=${r.k}  index ${r.selected_index}  |corr| ${r.correlation.toFixed(4)}  ` +
    `residual ${r.residual_norm.toExponential(3)}  ${r.in_true_support ? "in support" : "OFF support"}`);
  const cond = v.delta_k1 === null
    ? "exact delta_{K+1} skipped (too many subsets for the page)"
    : `exact delta_{K+1} = ${v.delta_k1.toFixed(4)}, conditions ${v.conditions_hold ? "hold" : "do not hold"}`;
  $("om-out").innerHTML =
    `<span class="${v.success ? "ok" : "bad"}">${v.success ? "support recovered" : "support missed"}</span>\n` +
    `true ${JSON.stringify(v.truth)}  recovered ${JSON.stringify(v.recovered)}\n${cond}\n` + rows.join("\n");
}

function showSharpness() {
  const [v, err] = call(sharpness, num("sh-k"), num("sh-t"), 2000, 1);
  if (err) { $("sh-out").textContent = err; return; }
  if (!v.found) { $("sh-out").textContent = "no instance found within the search budget"; return; }
  $("sh-out").textContent =
    `exact delta_{K+1} = ${v.verified_delta.toFixed(8)} (bound ${v.sharp_bound.toFixed(6)})\n` +
    `support ${JSON.stringify(v.support)}, OMP selects ${JSON.stringify(v.selected)}\n` +
    v.rows.map((r) => r.map((x) => x.toFixed(5).padStart(10)).join(" ")).join("\n");
}

await init();
$("l1-delta").addEventListener("input", showLemma1);
["cc-k", "cc-eps"].forEach((id) => $(id).addEventListener("input", showCurves));
$("om-run").addEventListener("click", showOmp);
$("sh-run").addEventListener("click", showSharpness);
showLemma1();
showCurves();
showOmp();
