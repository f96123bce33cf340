from cddmpy.cli import main

raise SystemExit(main())
