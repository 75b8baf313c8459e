import init, { scene, sweep, decomposition } from "./pkg/filamap_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function runScene() {
  try {
    const v = scene(BigInt(num("sc-seed")), num("sc-wind"), num("sc-n"), num("sc-amp"), $("sc-mask").checked);
    const canvas = $("scene-canvas");
    canvas.width = v.width;
    canvas.height = v.height;
    const img = new ImageData(new Uint8ClampedArray(v.rgba()), v.width, v.height);
    canvas.getContext("2d").putImageData(img, 0, 0);
    $("sc-info").textContent =
      `${v.components} filaments retained of ${v.truth_components} injected; ${v.masked} pixels masked`;
    v.free();
  } catch (e) {
    $("sc-info").textContent = String(e);
  }
}

function drawCurves(canvas, xs, curves) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const px = (x) => pad + ((x - xs[0]) / (xs[xs.length - 1] - xs[0])) * (w - 2 * pad);
  const py = (y) => h - pad - y * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(String(xs[0]), pad - 8, h - 10);
  ctx.fillText(String(xs[xs.length - 1]), w - pad - 8, h - 10);
  ctx.fillText("1", 10, pad + 4);
  ctx.fillText("0", 10, h - pad + 4);
  curves.forEach(({ ys, color, label }, k) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(label, w - pad - 80, pad + 14 + 14 * k);
  });
}

function runSweep() {
  try {
    const v = sweep(BigInt(num("sw-seed")), num("sw-n"), num("sw-exp"), num("sw-noise"));
    const m = v.length / 3;
    const xs = Array.from(v.slice(0, m));
    const r = Array.from(v.slice(m, 2 * m));
    const d = Array.from(v.slice(2 * m));
    drawCurves($("sweep-canvas"), xs, [
      { ys: r, color: "#c03020", label: "|pearson|" },
      { ys: d, color: "#2050c0", label: "dcor" },
    ]);
    const best = r.indexOf(Math.max(...r));
    $("sw-info").textContent = `|pearson| peaks at x = ${xs[best]} (${r[best].toFixed(3)})`;
  } catch (e) {
    $("sw-info").textContent = String(e);
  }
}

function runDecomposition() {
  try {
    const v = decomposition(BigInt(num("dc-seed")), num("dc-n"), num("dc-b"), num("dc-eps"), num("dc-omega"), num("dc-delta"));
    const f = (x) => (Number.isNaN(x) ? "unavailable" : x.toFixed(4));
    $("dc-out").textContent =
      `pearson     ${f(v[0])}\ndcor        ${f(v[1])}\nlinear      ${f(v[2])}\nnonlinear   ${f(v[3])}\n` +
      `B estimate  ${f(v[4])}\neps2 est.   ${f(v[5])}`;
  } catch (e) {
    $("dc-out").textContent = String(e);
  }
}

await init();
$("sc-run").onclick = runScene;
$("sw-run").onclick = runSweep;
$("dc-run").onclick = runDecomposition;
runScene();
runSweep();
runDecomposition();
