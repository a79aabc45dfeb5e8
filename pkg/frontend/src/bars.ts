// Horizontal probability/confidence bars for the diagnostics panel.

export interface BarEntry {
  label: string;
  value: number; // in [0, 1]
}

export function renderBars(root: HTMLElement, entries: BarEntry[]): void {
  root.innerHTML = entries
    .map(({ label, value }) => {
      const pct = Math.round(Math.max(0, Math.min(1, value)) * 100);
      return `
      <div class="bar-row" style="display:flex;gap:8px;align-items:center;margin:4px 0;">
        <div style="width:140px;font-size:12px;opacity:.85" title="${label}">${label}</div>
        <div style="flex:1;height:10px;background:rgba(0,0,0,.08);border-radius:999px;overflow:hidden">
          <div style="width:${pct}%;height:100%;background:#4a7fd4;transition:width 150ms ease;"></div>
        </div>
        <div style="width:40px;text-align:right;font-size:12px;opacity:.85">${pct}%</div>
      </div>`;
    })
    .join("");
}
