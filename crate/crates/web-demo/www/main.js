import init, { theta, transgression, rigidity } from "./pkg/toeplitz_rigidity_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (x) => x.toPrecision(10);

function guarded(out, f) {
  try {
    f();
  } catch (e) {
    $(out).textContent = String(e);
  }
}

function table(headers, rows) {
  const head = "<tr>" + headers.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  const body = rows.map((r) => "<tr>" + r.map((c) => `<td>${c}</td>`).join("") + "</tr>").join("");
  return `<table>${head}${body}</table>`;
}

function runTheta() {
  guarded("th-out", () => {
    const r = JSON.parse(theta($("th-kind").value, num("th-vre"), num("th-vim"), num("th-tre"), num("th-tim")));
    $("th-out").textContent = `${fmt(r.re)} ${r.im < 0 ? "-" : "+"} ${fmt(Math.abs(r.im))} i    |value| = ${fmt(r.abs)}`;
  });
}

function runTransgression() {
  guarded("tr-out", () => {
    const j = num("tr-j");
    const r = JSON.parse(transgression(j, num("tr-d"), num("tr-q"), j === 1 ? num("tr-n") : undefined));
    const headers = ["degree"].concat([...Array(r.trunc_half_units).keys()].map((k) => `q^${k / 2}`));
    $("tr-out").innerHTML = table(headers, r.rows.map((row) => [row.degree].concat(row.exact)));
  });
}

function runRigidity() {
  guarded("rg-out", () => {
    const r = JSON.parse(rigidity($("rg-data").value, $("rg-fn").value, num("rg-n"), num("rg-q")));
    const verdict = r.rigid ? '<span class="pass">rigid</span>' : '<span class="fail">not rigid</span>';
    const orders = r.variation.map((_, k) => `q^${k / 2}`);
    const rows = r.t.map((t, i) => [fmt(t)].concat(r.coefficients[i].map(([re, im]) => `${fmt(re)}${Math.abs(im) > 1e-12 ? ` ${im < 0 ? "-" : "+"} ${fmt(Math.abs(im))}i` : ""}`)));
    rows.push(["variation"].concat(r.variation.map((v) => v.toExponential(2))));
    $("rg-out").innerHTML =
      `<p>${r.description}</p><p>anomaly n = ${r.anomaly_n ?? "undefined"}; F_${r.fn} is ${verdict} (max variation ${r.max_variation.toExponential(2)})</p>` +
      table(["t"].concat(orders), rows) +
      r.notes.map((n) => `<p>${n}</p>`).join("");
  });
}

await init();
$("th-go").onclick = runTheta;
$("tr-go").onclick = runTransgression;
$("rg-go").onclick = runRigidity;
runTheta();
runTransgression();
runRigidity();
