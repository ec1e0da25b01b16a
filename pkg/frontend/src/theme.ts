// Every visual constant lives here; the view only consumes these values.
// Proportions are percentages of the stage, which is aspect-locked to the
// 1380x690 worktable so projected geometry keeps its shape on any output.

export const THEME = {
  // projector coordinate space the core's dial outline is expressed in
  projectorSpace: [1380, 690] as const,
  // the default calibration is the identity, which leaves table y pointing
  // away from the cook while screen y grows downward; flip so the front
  // edge of the table lands at the bottom of the projected image
  flipProjectorY: true,

  background: "#11151a",
  surface: "#1d242d",
  border: "#39434f",
  text: "#e9eef3",
  dimText: "#93a3b4",
  highlight: "#ffb347",
  highlightText: "#241704",
  dialOutline: "#5ec878",
  alert: "#d4574e",
  font: "system-ui, 'Segoe UI', sans-serif",

  boxColumn: { leftPct: 2.5, topPct: 16, widthPct: 18, gapPct: 2 },
  title: { topPct: 4, sizeVmin: 4.2 },
  bubbleRow: { leftPct: 24, topPct: 17, rightPct: 3, gapPct: 1.5 },
  detail: { leftPct: 24, topPct: 33, rightPct: 3, sizeVmin: 2.4 },
} as const;

export function stylesheet(): string {
  const t = THEME;
  return `
.stage {
  position: relative;
  aspect-ratio: ${t.projectorSpace[0]} / ${t.projectorSpace[1]};
  max-width: 100vw;
  max-height: 100vh;
  margin: 0 auto;
  overflow: hidden;
  background: ${t.background};
  color: ${t.text};
  font-family: ${t.font};
}
.splash {
  position: absolute;
  inset: 0;
  display: none;
  align-items: center;
  justify-content: center;
  font-size: 3.2vmin;
  color: ${t.dimText};
  letter-spacing: 0.08em;
}
.stage.idle .splash { display: flex; }
.stage.idle .title, .stage.idle .boxes, .stage.idle .bubbles, .stage.idle .detail { display: none; }
.title {
  position: absolute;
  top: ${t.title.topPct}%;
  left: 50%;
  transform: translateX(-50%);
  font-size: ${t.title.sizeVmin}vmin;
  font-weight: 600;
}
.boxes {
  position: absolute;
  left: ${t.boxColumn.leftPct}%;
  top: ${t.boxColumn.topPct}%;
  width: ${t.boxColumn.widthPct}%;
  display: flex;
  flex-direction: column;
  gap: ${t.boxColumn.gapPct}vmin;
}
.box {
  border: 0.3vmin solid ${t.border};
  border-radius: 1vmin;
  background: ${t.surface};
  padding: 1.4vmin 1.8vmin;
  font-size: 2.6vmin;
  text-align: center;
}
.bubbles {
  position: absolute;
  left: ${t.bubbleRow.leftPct}%;
  top: ${t.bubbleRow.topPct}%;
  right: ${t.bubbleRow.rightPct}%;
  display: flex;
  gap: ${t.bubbleRow.gapPct}vmin;
}
.bubble {
  flex: 1 1 0;
  border: 0.3vmin solid ${t.border};
  border-radius: 999px;
  background: ${t.surface};
  color: ${t.dimText};
  padding: 1.6vmin 1.2vmin;
  font-size: 2vmin;
  text-align: center;
}
.bubble.highlighted {
  background: ${t.highlight};
  border-color: ${t.highlight};
  color: ${t.highlightText};
  font-weight: 600;
}
.detail {
  position: absolute;
  left: ${t.detail.leftPct}%;
  top: ${t.detail.topPct}%;
  right: ${t.detail.rightPct}%;
  font-size: ${t.detail.sizeVmin}vmin;
  color: ${t.text};
  line-height: 1.5;
}
.overlay {
  position: absolute;
  inset: 0;
  width: 100%;
  height: 100%;
  pointer-events: none;
}
.dial-outline {
  fill: none;
  stroke: ${t.dialOutline};
  stroke-width: 4;
  stroke-dasharray: 14 10;
}
.link-status {
  position: absolute;
  right: 1.2vmin;
  bottom: 1.2vmin;
  font-size: 1.8vmin;
  color: ${t.dimText};
}
.link-status.down { color: ${t.alert}; }
.controls {
  display: flex;
  gap: 0.6em;
  justify-content: center;
  padding: 0.5em;
  background: ${t.background};
}
.controls button {
  font: inherit;
  font-size: 1.9vmin;
  color: ${t.text};
  background: ${t.surface};
  border: 0.2vmin solid ${t.border};
  border-radius: 0.8vmin;
  padding: 0.4em 1.1em;
  cursor: pointer;
}
.controls button:disabled { opacity: 0.45; cursor: default; }
`;
}
