import { render, renderTickers } from "./render.js";
import { SessionClient } from "./client.js";
import { ViewModel } from "./viewmodel.js";

const BASE = location.origin.startsWith("http")
  ? location.origin
  : "http://127.0.0.1:8000";

async function boot(): Promise<void> {
  const svg = document.getElementById("graph") as unknown as SVGSVGElement;
  const tickers = document.getElementById("tickers") as HTMLElement;
  const picker = document.getElementById("scenario") as HTMLSelectElement;
  const speedInput = document.getElementById("speed") as HTMLInputElement;
  const startBtn = document.getElementById("start") as HTMLButtonElement;
  const banner = document.getElementById("banner") as HTMLElement;

  const listing = await fetch(`${BASE}/scenarios`).then((r) => r.json());
  for (const sc of listing.scenarios) {
    const opt = document.createElement("option");
    opt.value = sc.name;
    opt.textContent = `${sc.name} (${sc.family}, n=${sc.size}, ${sc.penetration}% SDN)`;
    picker.appendChild(opt);
  }

  let dirty = true;
  const vm = new ViewModel();
  const client = new SessionClient(BASE, vm, () => {
    dirty = true;
  });

  startBtn.onclick = async () => {
    startBtn.disabled = true;
    try {
      const sid = await client.createSession(picker.value, Number(speedInput.value) || 1);
      client.connect(sid);
      setTimeout(() => {
        const prefixes = Object.keys(vm.topology?.originations ?? {});
        if (prefixes.length) client.subscribeTree(prefixes[0]);
      }, 300);
    } catch (err) {
      banner.textContent = String(err);
      startBtn.disabled = false;
    }
  };

  function frame(): void {
    if (dirty) {
      dirty = false;
      render(svg, vm, {
        onToggleLink: (a, b, up) => client.toggleLink(a, b, up),
      });
      renderTickers(tickers, vm);
      banner.textContent = vm.lastError ?? "";
    }
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

boot();
