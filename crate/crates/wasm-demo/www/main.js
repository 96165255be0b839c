import init, { Session } from "./pkg/fiedler_wasm.js";

const $ = (id) => document.getElementById(id);
let session;
let estimates = null;
const history = [];

function layout(n, w, h) {
  const r = Math.min(w, h) / 2 - 30;
  return Array.from({ length: n }, (_, i) => {
    const a = (2 * Math.PI * i) / n - Math.PI / 2;
    return [w / 2 + r * Math.cos(a), h / 2 + r * Math.sin(a)];
  });
}

function drawGraph() {
  const c = $("graph"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const n = session.nodeCount();
  const pos = layout(n, c.width, c.height);
  const e = session.edges();
  ctx.strokeStyle = "#999";
  for (let k = 0; k < e.length; k += 2) {
    const [a, b] = [pos[e[k]], pos[e[k + 1]]];
    ctx.beginPath(); ctx.moveTo(a[0], a[1]); ctx.lineTo(b[0], b[1]); ctx.stroke();
  }
  const truth = session.lambda2();
  pos.forEach(([x, y], i) => {
    let fill = "#4a7bd0";
    if (estimates) {
      const err = Math.min(1, Math.abs(estimates[i] - truth) / Math.max(truth, 1e-9));
      fill = `rgb(${Math.round(60 + 195 * err)}, ${Math.round(170 - 120 * err)}, 80)`;
    }
    ctx.fillStyle = fill;
    ctx.beginPath(); ctx.arc(x, y, 14, 0, 2 * Math.PI); ctx.fill();
    ctx.fillStyle = "#fff"; ctx.textAlign = "center"; ctx.textBaseline = "middle";
    ctx.fillText(estimates ? estimates[i].toFixed(2) : String(i), x, y);
  });
}

function drawSpectrum() {
  const ev = session.eigenvalues();
  $("spectrum").textContent =
    `λ₂ = ${session.lambda2().toFixed(6)}\neigenvalues: ${Array.from(ev, (v) => v.toFixed(3)).join(", ")}`;
  const c = $("eig"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const max = Math.max(...ev, 1e-9);
  const x = (v) => 20 + (v / max) * (c.width - 40);
  ctx.strokeStyle = "#aaa";
  ctx.beginPath(); ctx.moveTo(20, 100); ctx.lineTo(c.width - 20, 100); ctx.stroke();
  ev.forEach((v, i) => {
    ctx.fillStyle = i === 1 ? "#d04a4a" : "#4a7bd0";
    ctx.fillRect(x(v) - 2, i === 1 ? 40 : 60, 4, i === 1 ? 60 : 40);
  });
  ctx.fillStyle = "#333";
  ctx.fillText("0", 16, 115); ctx.fillText(max.toFixed(2), c.width - 40, 115);
}

function drawCurve() {
  const c = $("curve"), ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  if (history.length === 0) return;
  const max = Math.max(...history.map((r) => Math.max(r[1], r[2])));
  const px = (i) => 30 + (i / Math.max(1, history.length - 1)) * (c.width - 50);
  const py = (v) => c.height - 20 - (v / max) * (c.height - 40);
  [[1, "#4a7bd0", "train ℒ₂"], [2, "#d04a4a", "val ℒ₁"]].forEach(([k, color, name], j) => {
    ctx.strokeStyle = color; ctx.beginPath();
    history.forEach((r, i) => (i ? ctx.lineTo(px(i), py(r[k])) : ctx.moveTo(px(i), py(r[k]))));
    ctx.stroke();
    ctx.fillStyle = color; ctx.fillText(name, c.width - 80, 14 + 14 * j);
  });
}

function train(epochs) {
  for (let i = 0; i < epochs; i++) history.push(Array.from(session.trainEpoch()));
  $("log").textContent = history
    .slice(-12)
    .map(([e, l2, l1]) => `epoch ${e}: train ℒ₂ ${l2.toFixed(4)}  val ℒ₁ ${l1.toFixed(4)}`)
    .join("\n");
  drawCurve();
}

function simulate() {
  estimates = Array.from(session.simulate());
  const truth = session.lambda2();
  $("estimates").textContent = `true λ₂ = ${truth.toFixed(3)}\n` +
    estimates.map((v, i) => `node ${i}: ${v.toFixed(3)}  (|error| ${Math.abs(v - truth).toFixed(3)})`).join("\n");
  drawGraph();
}

function guarded(fn) {
  return () => {
    try { $("status").textContent = ""; fn(); } catch (e) { $("status").textContent = String(e); }
  };
}

await init();
session = new Session(0);
$("status").textContent = "";
$("draw").onclick = guarded(() => {
  session.drawGraph(Number($("n").value), Number($("seed").value), 0);
  estimates = null;
  drawGraph(); drawSpectrum();
});
$("train").onclick = guarded(() => train(1));
$("train5").onclick = guarded(() => train(5));
$("simulate").onclick = guarded(simulate);
$("draw").onclick();
