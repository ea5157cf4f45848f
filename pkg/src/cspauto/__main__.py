from cspauto.cli import main

main()
