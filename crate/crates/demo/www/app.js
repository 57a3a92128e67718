import init, { face_mesh, roc, attention } from "./pkg/facemotion_demo.js";

const $ = (id) => document.getElementById(id);

function call(fn, info, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) {
    info.textContent = out.error;
    info.className = "error";
    return null;
  }
  info.className = "";
  return out;
}

function drawMesh() {
  const info = $("mesh-info");
  const out = call(face_mesh, info, Number($("mesh-seed").value), Number($("mesh-frame").value));
  if (!out) return;
  const c = $("mesh");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const xs = out.points.map((p) => p[0]);
  const ys = out.points.map((p) => p[1]);
  const [x0, x1, y0, y1] = [Math.min(...xs), Math.max(...xs), Math.min(...ys), Math.max(...ys)];
  const s = 0.9 * Math.min(c.width / (x1 - x0), c.height / (y1 - y0));
  const px = (p) => [c.width / 2 + s * (p[0] - (x0 + x1) / 2), c.height / 2 - s * (p[1] - (y0 + y1) / 2)];
  ctx.strokeStyle = "#69c";
  ctx.beginPath();
  for (const [i, j] of out.edges) {
    ctx.moveTo(...px(out.points[i]));
    ctx.lineTo(...px(out.points[j]));
  }
  ctx.stroke();
  ctx.fillStyle = "#124";
  for (const p of out.points) {
    const [x, y] = px(p);
    ctx.fillRect(x - 1.5, y - 1.5, 3, 3);
  }
  info.textContent = `${out.points.length} landmarks, ${out.edges.length} edges`;
}

function drawRoc() {
  const info = $("roc-info");
  const out = call(roc, info, $("genuine").value, $("impostor").value);
  if (!out) return;
  const c = $("roc");
  const ctx = c.getContext("2d");
  const m = 30;
  const w = c.width - 2 * m;
  ctx.clearRect(0, 0, c.width, c.height);
  ctx.strokeStyle = "#bbb";
  ctx.strokeRect(m, m, w, w);
  ctx.beginPath();
  ctx.moveTo(m, m + w);
  ctx.lineTo(m + w, m);
  ctx.stroke();
  ctx.strokeStyle = "#c33";
  ctx.lineWidth = 2;
  ctx.beginPath();
  out.points.forEach(([f, t], k) => (k ? ctx.lineTo : ctx.moveTo).call(ctx, m + f * w, m + (1 - t) * w));
  ctx.stroke();
  ctx.lineWidth = 1;
  ctx.fillStyle = "#222";
  ctx.fillText("false match rate", m + w / 2 - 40, c.height - 8);
  ctx.fillText("true match rate", 2, m - 10);
  info.textContent = `AUC ${out.auc.toFixed(4)}`;
}

function drawAttention() {
  const info = $("att-info");
  const out = call(attention, info, Number($("att-seed").value), Number($("att-frames").value));
  if (!out) return;
  const c = $("att");
  const ctx = c.getContext("2d");
  const n = out.attention.length;
  const m = 20;
  const bw = (c.width - 2 * m) / n;
  const h = c.height - 2 * m;
  ctx.clearRect(0, 0, c.width, c.height);
  ctx.fillStyle = "#fde9c8";
  for (const [a, b] of out.bursts) ctx.fillRect(m + a * bw, m, (b - a) * bw, h);
  const amax = Math.max(...out.attention);
  out.attention.forEach((a, t) => {
    ctx.fillStyle = t === out.t_max ? "#c33" : "#69c";
    ctx.fillRect(m + t * bw + 1, m + h * (1 - a / amax), bw - 2, (h * a) / amax);
  });
  const emax = Math.max(...out.energy) || 1;
  ctx.strokeStyle = "#222";
  ctx.beginPath();
  out.energy.forEach((e, t) => (t ? ctx.lineTo : ctx.moveTo).call(ctx, m + (t + 0.5) * bw, m + h * (1 - e / emax)));
  ctx.stroke();
  const inside = out.bursts.some(([a, b]) => out.t_max >= a && out.t_max < b);
  info.textContent = `most attended frame ${out.t_max} (${inside ? "inside" : "outside"} the burst)`;
}

await init();
$("mesh-seed").addEventListener("input", drawMesh);
$("mesh-frame").addEventListener("input", drawMesh);
$("roc-run").addEventListener("click", drawRoc);
$("att-run").addEventListener("click", drawAttention);
drawMesh();
drawRoc();
drawAttention();
